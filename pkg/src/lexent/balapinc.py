"""balAPinc: ranked context inclusion (APinc) combined with LIN overlap."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .metrics import weighted_f
from .vsm import FeatureSet, PpmiMatrix, row_features


@dataclass(frozen=True)
class BalapincParams:
    max_F: int | None = None
    T: float = 0.5

    def __post_init__(self):
        if self.max_F is not None and self.max_F < 1:
            raise ValueError("max_F must be a positive integer or None")
        if not 0.0 <= self.T <= 1.0:
            raise ValueError(f"T must lie in [0, 1], got {self.T!r}")


@dataclass(frozen=True)
class PairScore:
    a: str
    b: str
    score: float


def rel(f, Fw: FeatureSet) -> float:
    r = Fw.rank(f)
    if r is None:
        return 0.0
    return 1.0 - r / (len(Fw) + 1)


def apinc(Fu: FeatureSet, Fv: FeatureSet) -> float:
    """Average-precision-style inclusion of u's ranked features in v's."""
    n = len(Fu)
    if n == 0:
        return 0.0
    total = 0.0
    included = 0
    denom = len(Fv) + 1
    for r, f in enumerate(Fu.contexts, 1):
        rv = Fv.rank(f)
        if rv is None:
            continue
        included += 1
        total += (included / r) * (1.0 - rv / denom)
    return total / n


def lin(Fu: FeatureSet, Fv: FeatureSet) -> float:
    denom = float(Fu.weights.sum() + Fv.weights.sum())
    if denom == 0.0:
        return 0.0
    num = sum(w + Fv.weight(f) for f, w in zip(Fu.contexts, Fu.weights) if f in Fv)
    return num / denom


def balapinc(Fu: FeatureSet, Fv: FeatureSet) -> float:
    return math.sqrt(apinc(Fu, Fv) * lin(Fu, Fv))


def classify(score: float, params: BalapincParams | float) -> int:
    T = params.T if isinstance(params, BalapincParams) else float(params)
    return int(score >= T)


def threshold_candidates(scores) -> np.ndarray:
    """Thresholds covering every distinct classification of ``scores``.

    The lowest candidate is the minimum score itself (everything predicted 1,
    since the boundary is inclusive); the highest sits just above the maximum.
    """
    s = np.unique(np.asarray(scores, dtype=np.float64))
    mids = (s[:-1] + s[1:]) / 2.0
    return np.concatenate(([s[0]], mids, [np.nextafter(s[-1], np.inf)]))


def tune_threshold(scores, labels) -> float:
    """Threshold maximizing weighted F; the smallest wins ties."""
    raw = [s.score if isinstance(s, PairScore) else s for s in scores]
    scores = np.asarray(raw, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if len(scores) != len(labels):
        raise ValueError("scores and labels differ in length")
    if len(set(labels.tolist())) < 2:
        raise ValueError("threshold tuning needs both classes")
    best_T, best_F = None, -1.0
    for T in threshold_candidates(scores):
        F = weighted_f(labels, (scores >= T).astype(np.int64))
        if F > best_F:
            best_T, best_F = float(T), F
    return best_T


class BalapincScorer:
    """Scores word pairs from a PPMI matrix, caching truncated feature sets."""

    def __init__(self, matrix: PpmiMatrix, max_F: int | None = None):
        self.matrix = matrix
        self.max_F = max_F
        self._cache: dict[str, FeatureSet] = {}

    def features(self, word: str) -> FeatureSet:
        fs = self._cache.get(word)
        if fs is None:
            fs = self._cache[word] = row_features(self.matrix, word, self.max_F)
        return fs

    def __contains__(self, word):
        return word in self.matrix.rows

    def score(self, a: str, b: str) -> float:
        return balapinc(self.features(a), self.features(b))

    def score_pairs(self, pairs) -> list[PairScore]:
        return [PairScore(a, b, self.score(a, b)) for a, b in pairs]


def save_scores(path, scores, labels=None, params: BalapincParams | None = None):
    from .vsm import _atomic_write
    head = "# balapinc"
    if params is not None:
        head += f" max_F={params.max_F} T={float(params.T)!r}"
    lines = [head]
    for i, s in enumerate(scores):
        line = f"{s.a}\t{s.b}\t{s.score:.17g}"
        if labels is not None:
            line += f"\t{int(labels[i])}"
        lines.append(line)
    _atomic_write(path, "\n".join(lines) + "\n")


def load_scores(path):
    """Returns ``(scores, labels)``; labels is None when the file has none."""
    scores, labels = [], []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) not in (3, 4):
                raise ValueError(f"{path}:{n}: expected 3 or 4 tab-separated fields")
            scores.append(PairScore(parts[0], parts[1], float(parts[2])))
            if len(parts) == 4:
                labels.append(int(parts[3]))
    return scores, (labels if labels else None)
