"""Ranking and classification measures, Wilson intervals and Fisher's exact test."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from statistics import NormalDist

import numpy as np


class RankedList:
    """Scored items sorted by descending score; ties keep input order."""

    def __init__(self, scores, labels):
        scores = np.asarray(scores, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        if scores.shape != labels.shape:
            raise ValueError("scores and labels differ in length")
        if not np.isin(labels, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        order = np.argsort(-scores, kind="stable")
        self.scores = scores[order]
        self.labels = labels[order]
        self.order = order

    def __len__(self):
        return len(self.labels)


def average_precision(ranked: RankedList, positive_label: int = 1,
                      direction: str | None = None) -> float | None:
    """AP1 scans from the top for label 1; AP0 scans from the bottom for label 0.

    ``direction`` defaults to ``from_top`` for label 1 and ``from_bottom`` for
    label 0.  Returns None when no item carries ``positive_label``.
    """
    if direction is None:
        direction = "from_top" if positive_label == 1 else "from_bottom"
    labels = ranked.labels if direction == "from_top" else ranked.labels[::-1]
    hits = (labels == positive_label).astype(np.float64)
    n_pos = hits.sum()
    if n_pos == 0:
        return None
    precision = np.cumsum(hits) / np.arange(1, len(hits) + 1)
    return float((precision * hits).sum() / n_pos)


@dataclass(frozen=True)
class ConfusionMatrix:
    """``cij`` counts items of actual class i predicted as class j."""

    c00: int = 0
    c01: int = 0
    c10: int = 0
    c11: int = 0

    @property
    def total(self) -> int:
        return self.c00 + self.c01 + self.c10 + self.c11

    @classmethod
    def from_labels(cls, actual, predicted) -> "ConfusionMatrix":
        a = np.asarray(actual, dtype=np.int64)
        p = np.asarray(predicted, dtype=np.int64)
        return cls(int(((a == 0) & (p == 0)).sum()), int(((a == 0) & (p == 1)).sum()),
                   int(((a == 1) & (p == 0)).sum()), int(((a == 1) & (p == 1)).sum()))

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.c00 + other.c00, self.c01 + other.c01,
                               self.c10 + other.c10, self.c11 + other.c11)


@dataclass
class MetricsReport:
    pre: float
    rec: float
    f: float
    acc: float
    wilson_low: float
    wilson_high: float
    confusion: ConfusionMatrix
    classwise: dict = field(default_factory=dict)
    zero_denominators: tuple = ()
    ap0: float | None = None
    ap1: float | None = None
    leaked_terms: int | None = None

    def as_dict(self) -> dict:
        c = self.confusion
        out = {"ap0": self.ap0, "ap1": self.ap1, "pre": self.pre, "rec": self.rec,
               "f": self.f, "acc": self.acc, "ci_low": self.wilson_low,
               "ci_high": self.wilson_high, "c00": c.c00, "c01": c.c01,
               "c10": c.c10, "c11": c.c11}
        if self.leaked_terms is not None:
            out["leaked_terms"] = self.leaked_terms
        return out

    def to_kv(self) -> str:
        """Machine-readable ``key=value`` lines."""
        lines = []
        for key, val in self.as_dict().items():
            if val is None:
                lines.append(f"{key}=NA")
            elif isinstance(val, float):
                lines.append(f"{key}={float(val)!r}")
            else:
                lines.append(f"{key}={val}")
        return "\n".join(lines) + "\n"

    def table(self) -> str:
        fmt = lambda v: "  NA " if v is None else f"{v:.3f}"
        head = f"{'AP0':>6} {'AP1':>6} {'Pre':>6} {'Rec':>6} {'F':>6} {'Acc':>6}  95% C.I."
        row = (f"{fmt(self.ap0):>6} {fmt(self.ap1):>6} {self.pre:6.3f} {self.rec:6.3f} "
               f"{self.f:6.3f} {self.acc:6.1f}  {100 * self.wilson_low:.1f}--{100 * self.wilson_high:.1f}")
        return head + "\n" + row + "\n"


def _ratio(num, den, name, flags):
    if den == 0:
        flags.append(name)
        return 0.0
    return num / den


def metrics(confusion: ConfusionMatrix, confidence: float = 0.95) -> MetricsReport:
    """Class-wise and class-size-weighted precision, recall and F, plus accuracy.

    Any class-wise measure with a zero denominator is set to 0 and its name
    recorded in ``zero_denominators``.
    """
    c = confusion
    n = c.total
    if n <= 0:
        raise ValueError("empty confusion matrix")
    flags: list[str] = []
    pre0 = _ratio(c.c00, c.c00 + c.c10, "pre0", flags)
    pre1 = _ratio(c.c11, c.c11 + c.c01, "pre1", flags)
    rec0 = _ratio(c.c00, c.c00 + c.c01, "rec0", flags)
    rec1 = _ratio(c.c11, c.c11 + c.c10, "rec1", flags)
    f0 = _ratio(2 * pre0 * rec0, pre0 + rec0, "f0", flags)
    f1 = _ratio(2 * pre1 * rec1, pre1 + rec1, "f1", flags)
    w0 = (c.c00 + c.c01) / n
    w1 = (c.c11 + c.c10) / n
    acc_frac = (c.c00 + c.c11) / n
    low, high = wilson_interval(acc_frac, n, confidence)
    return MetricsReport(
        pre=w0 * pre0 + w1 * pre1, rec=w0 * rec0 + w1 * rec1, f=w0 * f0 + w1 * f1,
        acc=100.0 * acc_frac, wilson_low=low, wilson_high=high, confusion=c,
        classwise={"pre0": pre0, "pre1": pre1, "rec0": rec0, "rec1": rec1,
                   "f0": f0, "f1": f1, "w0": w0, "w1": w1},
        zero_denominators=tuple(flags))


def weighted_f(actual, predicted) -> float:
    return metrics(ConfusionMatrix.from_labels(actual, predicted)).f


def evaluate(labels, scores, predictions, confidence: float = 0.95) -> MetricsReport:
    """Full report for one run: AP0/AP1 from the scores, the rest from predictions."""
    report = metrics(ConfusionMatrix.from_labels(labels, predictions), confidence)
    ranked = RankedList(scores, labels)
    report.ap0 = average_precision(ranked, 0)
    report.ap1 = average_precision(ranked, 1)
    return report


def wilson_interval(acc_fraction: float, n: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if not 0.0 <= acc_fraction <= 1.0:
        raise ValueError("accuracy fraction must lie in [0, 1]")
    if n < 1:
        raise ValueError("n must be >= 1")
    z = NormalDist().inv_cdf(0.5 + confidence / 2.0)
    z2 = z * z
    denom = 1.0 + z2 / n

    def lower(x):
        # the bounds are the roots of a quadratic whose product is x^2/denom;
        # dividing by the upper root avoids cancellation when x is small
        upper = (x + z2 / (2 * n) + z * math.sqrt(x * (1 - x) / n + z2 / (4 * n * n))) / denom
        return x * x / (denom * upper)

    return lower(acc_fraction), 1.0 - lower(1.0 - acc_fraction)


def fisher_exact(correct_a: int, n_a: int, correct_b: int, n_b: int) -> float:
    """Two-sided Fisher exact p-value comparing two accuracies.

    The 2x2 table is (correct, incorrect) x (system A, system B).  Tables are
    enumerated with exact integer arithmetic over the fixed margins and every
    table no more probable than the observed one contributes.
    """
    if not (0 <= correct_a <= n_a and 0 <= correct_b <= n_b):
        raise ValueError("counts must lie within their totals")
    col = correct_a + correct_b
    lo, hi = max(0, col - n_b), min(col, n_a)
    weights = [math.comb(n_a, x) * math.comb(n_b, col - x) for x in range(lo, hi + 1)]
    observed = weights[correct_a - lo]
    tail = sum(w for w in weights if w <= observed)
    return float(Fraction(tail, sum(weights)))
