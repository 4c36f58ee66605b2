"""Binary kernel SVM trained with SMO, plus Platt probability calibration.

The solver works on the dual

    min_a  1/2 a'Qa - e'a   s.t.  0 <= a_i <= C,  y'a = 0,   Q_ij = y_i y_j K(x_i, x_j)

and picks the maximal-violating pair at every step.  The kernel matrix is
precomputed, which is fine at the sizes this package trains on (a few
thousand examples).
"""

from __future__ import annotations

import io
import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

MODEL_VERSION = 1


@dataclass(frozen=True)
class Kernel:
    kind: str = "polynomial"
    degree: int = 2
    gamma: float = 0.01

    def __post_init__(self):
        if self.kind not in ("polynomial", "rbf"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "polynomial" and self.degree < 1:
            raise ValueError("polynomial degree must be >= 1")
        if self.kind == "rbf" and not self.gamma > 0:
            raise ValueError("rbf gamma must be positive")

    @classmethod
    def polynomial(cls, degree: int = 2) -> "Kernel":
        return cls("polynomial", degree=degree)

    @classmethod
    def rbf(cls, gamma: float = 0.01) -> "Kernel":
        return cls("rbf", gamma=gamma)

    def __call__(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        Y = np.atleast_2d(Y)
        if self.kind == "polynomial":
            return (X @ Y.T) ** self.degree
        sq = (X * X).sum(1)[:, None] + (Y * Y).sum(1)[None, :] - 2.0 * (X @ Y.T)
        return np.exp(-self.gamma * np.maximum(sq, 0.0))

    def describe(self) -> str:
        if self.kind == "polynomial":
            return f"kernel=polynomial degree={self.degree}"
        return f"kernel=rbf gamma={float(self.gamma)!r}"


@dataclass(frozen=True)
class TrainConfig:
    C: float = 1.0
    tol: float = 1e-3
    eps: float = 1e-12
    max_passes: int = 200
    seed: int = 0
    calibration_folds: int = 3

    def __post_init__(self):
        if not (self.C > 0 and self.tol > 0 and self.eps > 0 and self.max_passes > 0):
            raise ValueError("C, tol, eps and max_passes must be positive")


@dataclass(eq=False)
class SvmModel:
    support_vectors: np.ndarray
    alphas_signed: np.ndarray
    bias: float
    kernel: Kernel
    C: float
    platt_A: float | None = None
    platt_B: float | None = None
    converged: bool = True
    iterations: int = 0

    @property
    def dim(self) -> int:
        return self.support_vectors.shape[1]

    def to_bytes(self) -> bytes:
        buf = io.StringIO()
        save_model(self, buf)
        return buf.getvalue().encode("utf-8")


class TrainingError(ValueError):
    pass


def _labels_pm(labels) -> np.ndarray:
    y = np.asarray(labels)
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    return np.where(y == 1, 1.0, -1.0)


def smo(K: np.ndarray, y: np.ndarray, config: TrainConfig):
    """Solve the dual for a precomputed kernel matrix.

    Returns ``(alpha, rho, converged, iterations)`` with the decision function
    ``sum_i alpha_i y_i K(x_i, x) - rho``.
    """
    n = len(y)
    C, tol = config.C, config.tol
    rng = np.random.default_rng(config.seed)
    alpha = np.zeros(n)
    G = -np.ones(n)
    diag = np.diag(K).copy()
    max_iter = config.max_passes * max(n, 1)
    pos = y > 0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        up = np.where(pos, alpha < C, alpha > 0)
        low = np.where(pos, alpha > 0, alpha < C)
        score = -y * G
        su = np.where(up, score, -np.inf)
        sl = np.where(low, score, np.inf)
        m, M = su.max(), sl.min()
        if m - M < tol:
            converged = True
            break
        cand_i = np.flatnonzero(su == m)
        cand_j = np.flatnonzero(sl == M)
        i = cand_i[0] if len(cand_i) == 1 else rng.choice(cand_i)
        j = cand_j[0] if len(cand_j) == 1 else rng.choice(cand_j)
        curv = max(diag[i] + diag[j] - 2.0 * K[i, j], 1e-12)
        t = (m - M) / curv
        t = min(t, C - alpha[i] if y[i] > 0 else alpha[i])
        t = min(t, alpha[j] if y[j] > 0 else C - alpha[j])
        if t <= config.eps:
            # no representable progress; the pair is stuck at its bounds
            converged = m - M < 10 * tol
            break
        alpha[i] += y[i] * t
        alpha[j] -= y[j] * t
        # snap to the box so bound tests stay exact
        for k in (i, j):
            if alpha[k] < config.eps:
                alpha[k] = 0.0
            elif alpha[k] > C - config.eps:
                alpha[k] = C
        G += y * (K[:, i] - K[:, j]) * t
    else:
        warnings.warn(f"SMO did not converge within {max_iter} iterations", stacklevel=2)
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = float(yG[free].mean())
    else:
        at_upper = alpha >= C
        # at the upper bound a positive example bounds rho from below, a negative from above
        lb_mask = np.where(pos, at_upper, ~at_upper)
        ub_mask = ~lb_mask
        lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
        ub = yG[ub_mask].min() if ub_mask.any() else np.inf
        if np.isfinite(lb) and np.isfinite(ub):
            rho = float((lb + ub) / 2.0)
        else:
            rho = float(lb if np.isfinite(lb) else ub)
    return alpha, rho, converged, it


def _fit_dual(X, y, kernel, config) -> SvmModel:
    K = kernel(X, X)
    alpha, rho, converged, it = smo(K, y, config)
    sv = alpha > 0
    return SvmModel(X[sv].copy(), (alpha * y)[sv], -rho, kernel, config.C,
                    converged=converged, iterations=it)


def _stratified_folds(y, k, rng):
    folds = [[] for _ in range(k)]
    for cls in (-1.0, 1.0):
        idx = np.flatnonzero(y == cls)
        rng.shuffle(idx)
        for n, i in enumerate(idx):
            folds[n % k].append(i)
    return [np.sort(np.array(f, dtype=np.int64)) for f in folds]


def train(X, labels, kernel: Kernel | None = None, config: TrainConfig | None = None) -> SvmModel:
    """Train on rows of ``X`` with 0/1 labels and attach Platt parameters.

    Platt parameters are fit on decision values from an internal stratified
    k-fold split (``config.calibration_folds``); when a fold cannot be
    trained the full model's training outputs are used instead.
    """
    kernel = kernel or Kernel()
    config = config or TrainConfig()
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D array")
    y = _labels_pm(labels)
    if len(y) != X.shape[0]:
        raise ValueError("X and labels differ in length")
    if len(np.unique(y)) < 2:
        raise TrainingError("training data must contain both classes")
    model = _fit_dual(X, y, kernel, config)

    rng = np.random.default_rng(config.seed)
    k = config.calibration_folds
    f = None
    if k >= 2 and min((y > 0).sum(), (y < 0).sum()) >= k:
        f = np.empty(len(y))
        for fold in _stratified_folds(y, k, rng):
            mask = np.ones(len(y), dtype=bool)
            mask[fold] = False
            if len(np.unique(y[mask])) < 2:
                f = None
                break
            sub = _fit_dual(X[mask], y[mask], kernel, config)
            f[fold] = decision_values(sub, X[fold])
    if f is None:
        f = decision_values(model, X)
    model.platt_A, model.platt_B = fit_platt(f, (y > 0).astype(int))
    return model


def decision_values(model: SvmModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.dim and len(model.alphas_signed):
        raise ValueError(f"expected {model.dim} features, got {X.shape[1]}")
    if len(model.alphas_signed) == 0:
        return np.full(X.shape[0], model.bias)
    return model.kernel(X, model.support_vectors) @ model.alphas_signed + model.bias


def decision_value(model: SvmModel, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("x must be a single feature vector")
    return float(decision_values(model, x[None, :])[0])


def sigmoid_prob(f, A: float, B: float):
    """``1 / (1 + exp(A f + B))`` evaluated without overflow."""
    z = A * np.asarray(f, dtype=np.float64) + B
    out = np.where(z >= 0, np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))),
                   1.0 / (1.0 + np.exp(-np.abs(z))))
    return np.clip(out, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))


def predict_prob(model: SvmModel, X):
    if model.platt_A is None:
        raise ValueError("model has no Platt parameters")
    p = sigmoid_prob(decision_values(model, X), model.platt_A, model.platt_B)
    return float(p[0]) if np.ndim(X) == 1 else p


def predict(model: SvmModel, X) -> np.ndarray:
    return (np.atleast_1d(predict_prob(model, np.atleast_2d(X))) >= 0.5).astype(np.int64)


class CalibrationError(ValueError):
    pass


def fit_platt(decision, labels, max_iter: int = 100) -> tuple[float, float]:
    """Platt sigmoid fit with the Newton method of Lin, Lin and Weng (2007).

    Targets are smoothed to ``(N+ + 1)/(N+ + 2)`` and ``1/(N- + 2)``.
    """
    f = np.asarray(decision, dtype=np.float64)
    y = np.asarray(labels)
    if len(f) != len(y):
        raise ValueError("decision values and labels differ in length")
    n_pos = int((y == 1).sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise CalibrationError("Platt scaling needs both classes")
    hi, lo = (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0)
    t = np.where(y == 1, hi, lo)
    min_step, sigma = 1e-10, 1e-12

    def objective(A, B):
        z = f * A + B
        return float(np.sum(np.where(z >= 0, t * z + np.log1p(np.exp(-z)),
                                     (t - 1.0) * z + np.log1p(np.exp(z)))))

    A, B = 0.0, math.log((n_neg + 1.0) / (n_pos + 1.0))
    fval = objective(A, B)
    for _ in range(max_iter):
        z = f * A + B
        p = np.where(z >= 0, np.exp(-z) / (1.0 + np.exp(-z)), 1.0 / (1.0 + np.exp(z)))
        q = 1.0 - p
        d2 = p * q
        h11 = sigma + float(np.dot(f * f, d2))
        h22 = sigma + float(d2.sum())
        h21 = float(np.dot(f, d2))
        d1 = t - p
        g1 = float(np.dot(f, d1))
        g2 = float(d1.sum())
        if abs(g1) < 1e-5 and abs(g2) < 1e-5:
            break
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * dA + g2 * dB
        step = 1.0
        while step >= min_step:
            nA, nB = A + step * dA, B + step * dB
            nf = objective(nA, nB)
            if nf < fval + 1e-4 * step * gd:
                A, B, fval = nA, nB, nf
                break
            step /= 2.0
        else:
            warnings.warn("Platt line search failed", stacklevel=2)
            break
    else:
        warnings.warn("Platt scaling reached the iteration limit", stacklevel=2)
    return float(A), float(B)


def save_model(model: SvmModel, dest):
    k = model.kernel
    lines = [f"lexent-svm version={MODEL_VERSION}",
             k.describe(),
             f"C={float(model.C)!r} dim={model.dim} n_sv={len(model.alphas_signed)}",
             f"bias={float(model.bias)!r} platt_A={float(model.platt_A)!r} platt_B={float(model.platt_B)!r}"]
    for a, sv in zip(model.alphas_signed, model.support_vectors):
        lines.append(repr(float(a)) + "\t" + "\t".join(repr(float(x)) for x in sv))
    text = "\n".join(lines) + "\n"
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        from .vsm import _atomic_write
        _atomic_write(dest, text)


def load_model(path) -> SvmModel:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines[0].startswith("lexent-svm version="):
        raise ValueError("not a model file")
    kv = {}
    for line in lines[1:4]:
        kv.update(item.split("=", 1) for item in line.split())
    if kv["kernel"] == "polynomial":
        kernel = Kernel.polynomial(int(kv["degree"]))
    else:
        kernel = Kernel.rbf(float(kv["gamma"]))
    dim = int(kv["dim"])
    rows = [list(map(float, line.split("\t"))) for line in lines[4:] if line]
    arr = np.array(rows, dtype=np.float64).reshape(len(rows), dim + 1)
    as_float = lambda s: None if s == "None" else float(s)
    return SvmModel(arr[:, 1:], arr[:, 0], float(kv["bias"]), kernel, float(kv["C"]),
                    as_float(kv["platt_A"]), as_float(kv["platt_B"]))
