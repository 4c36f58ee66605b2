"""Experiment drivers: the three entailment methods, cross-validation and tuning.

Each method exposes ``fit(train_pairs)`` returning a fitted scorer with
``score(pairs)`` (real values, higher means "entails") and
``predict(pairs)`` (0/1 labels).  ``cross_validate`` takes any callable with
the signature of ``fit``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import svm
from .balapinc import BalapincParams, BalapincScorer, tune_threshold
from .features import SimDiffsSpace, ReferenceSet, batch_features
from .folds import FoldPlan, make_folds
from .metrics import MetricsReport, evaluate, weighted_f
from .vsm import Embedding, PpmiMatrix, project

logger = logging.getLogger(__name__)

GRID_K = (100, 200, 300, 400, 500)
GRID_P = tuple(round(0.1 * i, 1) for i in range(1, 11))
GRID_MAX_F = (1000, 2000, 3000, 4000, 5000)


def _ab(pairs):
    return [(p.a, p.b) if hasattr(p, "a") else (p[0], p[1]) for p in pairs]


def _labels(pairs):
    return np.array([p.label if hasattr(p, "label") else p[2] for p in pairs], dtype=np.int64)


class BalapincMethod:
    """Threshold classifier on balAPinc scores; ``fit`` tunes the threshold."""

    def __init__(self, matrix: PpmiMatrix, max_F: int | None = None, T: float | None = None):
        self.scorer = BalapincScorer(matrix, max_F)
        self.T = T

    @property
    def params(self) -> BalapincParams:
        return BalapincParams(self.scorer.max_F, self.T)

    def knows(self, word) -> bool:
        return word in self.scorer

    def score(self, pairs) -> np.ndarray:
        return np.array([self.scorer.score(a, b) for a, b in _ab(pairs)])

    def predict(self, pairs) -> np.ndarray:
        if self.T is None:
            raise ValueError("threshold not set; call fit first")
        return (self.score(pairs) >= self.T).astype(np.int64)

    def fit(self, pairs) -> "BalapincMethod":
        fitted = BalapincMethod.__new__(BalapincMethod)
        fitted.scorer = self.scorer
        fitted.T = tune_threshold(self.score(pairs), _labels(pairs))
        return fitted


class _SvmMethod:
    scheme = ""

    def __init__(self, resources, kernel: svm.Kernel, config: svm.TrainConfig | None):
        self.resources = resources
        self.kernel = kernel
        self.config = config or svm.TrainConfig()
        self.model: svm.SvmModel | None = None

    def knows(self, word) -> bool:
        return word in self.resources

    def features(self, pairs) -> np.ndarray:
        batch = batch_features(_ab(pairs), self.scheme, self.resources)
        if batch.skipped:
            missing = [batch.pairs[i] for i in batch.skipped[:3]]
            raise KeyError(f"{len(batch.skipped)} pairs have unknown terms, e.g. {missing}")
        return batch.X

    def fit(self, pairs):
        fitted = type(self).__new__(type(self))
        fitted.resources, fitted.kernel, fitted.config = self.resources, self.kernel, self.config
        fitted.model = svm.train(self.features(pairs), _labels(pairs), self.kernel, self.config)
        return fitted

    def score(self, pairs) -> np.ndarray:
        if self.model is None:
            raise ValueError("model not trained; call fit first")
        return np.atleast_1d(svm.predict_prob(self.model, self.features(pairs)))

    def predict(self, pairs) -> np.ndarray:
        return (self.score(pairs) >= 0.5).astype(np.int64)


class ConvecsMethod(_SvmMethod):
    """SVM (second-degree polynomial kernel by default) on concatenated unit rows."""

    scheme = "convecs"

    def __init__(self, emb: Embedding, kernel: svm.Kernel | None = None,
                 config: svm.TrainConfig | None = None):
        super().__init__(emb, kernel or svm.Kernel.polynomial(2), config)


class SimdiffsMethod(_SvmMethod):
    """SVM (RBF kernel by default) on similarity-difference features."""

    scheme = "simdiffs"

    def __init__(self, space: SimDiffsSpace, kernel: svm.Kernel | None = None,
                 config: svm.TrainConfig | None = None):
        super().__init__(space, kernel or svm.Kernel.rbf(), config)


def known_pairs(pairs, method) -> tuple[list, list]:
    """Split pairs into those the method can score and those it cannot."""
    keep, skip = [], []
    for p in pairs:
        a, b = _ab([p])[0]
        (keep if method.knows(a) and method.knows(b) else skip).append(p)
    return keep, skip


@dataclass
class CrossValidationResult:
    report: MetricsReport
    plan: FoldPlan
    fold_reports: list = field(default_factory=list)
    scores: np.ndarray | None = None
    labels: np.ndarray | None = None


def cross_validate(dataset, scorer_factory, setup: str = "standard", k: int = 10,
                   seed: int = 0, test_dataset=None, plan: FoldPlan | None = None
                   ) -> CrossValidationResult:
    """Train and score every fold; pool the confusion matrix and the ranking.

    Per-fold AP values are kept in ``fold_reports``; the headline AP0/AP1
    come from the pooled list, folds concatenated in fold order.
    """
    dataset = list(dataset)
    plan = plan or make_folds(dataset, setup, k, seed, test_dataset)
    test_pool = list(test_dataset) if setup == "different" else dataset
    all_scores, all_pred, all_labels, fold_reports = [], [], [], []
    for train_idx, test_idx in plan.splits():
        train = [dataset[i] for i in train_idx]
        test = [test_pool[i] for i in test_idx]
        fitted = scorer_factory(train)
        scores = np.asarray(fitted.score(test), dtype=np.float64)
        pred = np.asarray(fitted.predict(test), dtype=np.int64)
        labels = _labels(test)
        fold_reports.append(evaluate(labels, scores, pred))
        all_scores.append(scores)
        all_pred.append(pred)
        all_labels.append(labels)
    scores = np.concatenate(all_scores)
    labels = np.concatenate(all_labels)
    report = evaluate(labels, scores, np.concatenate(all_pred))
    report.leaked_terms = plan.leaked_terms
    return CrossValidationResult(report, plan, fold_reports, scores, labels)


def train_test(train, test, scorer_factory) -> MetricsReport:
    fitted = scorer_factory(list(train))
    return evaluate(_labels(test), fitted.score(test), fitted.predict(test))


def tune_balapinc(dev1, dev2, matrix: PpmiMatrix, grid=GRID_MAX_F) -> BalapincParams:
    """Pick ``max_F`` by F on dev2 (threshold tuned on dev1), then retune T on both."""
    best = None
    for max_F in grid:
        fitted = BalapincMethod(matrix, max_F).fit(dev1)
        F = weighted_f(_labels(dev2), fitted.predict(dev2))
        logger.info("max_F=%s T=%.6f F(dev2)=%.4f", max_F, fitted.T, F)
        if best is None or F > best[0]:
            best = (F, max_F)
    final = BalapincMethod(matrix, best[1]).fit(list(dev1) + list(dev2))
    return final.params


@dataclass
class GridPoint:
    k: int
    p: float
    f: float
    acc: float


def tune_svd_grid(dev1, dev2, scheme: str, factors, refs: ReferenceSet | None = None,
                  ks=GRID_K, ps=GRID_P, kernel: svm.Kernel | None = None,
                  config: svm.TrainConfig | None = None):
    """Grid search over ``(k, p)``: train on dev1, maximize weighted F on dev2.

    ``factors`` is one :class:`SvdFactors` for ConVecs or a ``(domain,
    function)`` pair for SimDiffs, computed once at the largest ``k``; both
    spaces share ``k`` and ``p``.  Ties go to smaller k, then smaller p.
    Returns ``(k, p, grid_points)``.
    """
    best, points = None, []
    for k in sorted(ks):
        for p in sorted(ps):
            if scheme == "convecs":
                emb = project(factors.truncate(k), p, "general")
                method = ConvecsMethod(emb, kernel, config)
            elif scheme == "simdiffs":
                dom_f, fun_f = factors
                dom = project(dom_f.truncate(k), p, "domain")
                fun = project(fun_f.truncate(k), p, "function")
                method = SimdiffsMethod(SimDiffsSpace(dom, fun, refs), kernel, config)
            else:
                raise ValueError(f"unknown scheme {scheme!r}")
            report = train_test(dev1, dev2, method.fit)
            points.append(GridPoint(k, p, report.f, report.acc))
            if best is None or report.f > best.f:
                best = points[-1]
    return best.k, best.p, points
