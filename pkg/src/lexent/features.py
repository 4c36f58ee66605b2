"""Pair feature vectors for the supervised learners.

ConVecs concatenates the unit-normalized embedding rows of both words.
SimDiffs describes a pair by differences of cosine similarities to a fixed,
ordered list of reference words, in a domain space and a function space.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .vsm import Embedding

SCHEMES = ("convecs", "simdiffs")


@dataclass(frozen=True)
class ReferenceSet:
    words: tuple

    def __post_init__(self):
        if len(set(self.words)) != len(self.words):
            raise ValueError("reference words must be distinct")

    def __len__(self):
        return len(self.words)

    @classmethod
    def load(cls, path=None) -> "ReferenceSet":
        """Read one word per line; default is the bundled Basic English list."""
        if path is None:
            text = resources.files("lexent").joinpath("data/basic_english.txt").read_text("utf-8")
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        words = []
        for line in text.splitlines():
            w = line.strip()
            if w and not w.startswith("#") and w not in words:
                words.append(w)
        return cls(tuple(words))

    def restrict(self, *embeddings: Embedding) -> "ReferenceSet":
        """Drop words missing from any of ``embeddings``, with a warning."""
        kept = tuple(w for w in self.words if all(w in e for e in embeddings))
        dropped = len(self.words) - len(kept)
        if dropped:
            warnings.warn(f"dropped {dropped} of {len(self.words)} reference words "
                          "absent from the embedding vocabulary", stacklevel=2)
        return ReferenceSet(kept)


@dataclass(frozen=True)
class PairFeatureVector:
    a: str
    b: str
    values: np.ndarray
    scheme: str


def _unit_rows(M: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(M, axis=-1, keepdims=True)
    return np.divide(M, norms, out=np.zeros_like(M, dtype=np.float64), where=norms > 0)


def convecs_features(emb: Embedding, a: str, b: str) -> PairFeatureVector:
    va, vb = _unit_rows(emb.vector(a)), _unit_rows(emb.vector(b))
    return PairFeatureVector(a, b, np.concatenate([va, vb]), "convecs")


class SimDiffsSpace:
    """Precomputed cosines of every row to the reference words, per space."""

    def __init__(self, dom: Embedding, fun: Embedding, refs: ReferenceSet):
        if len(refs) == 0:
            raise ValueError("reference set is empty")
        missing = [w for w in refs.words if w not in dom or w not in fun]
        if missing:
            raise ValueError(f"reference words missing from an embedding: {missing[:5]}")
        self.dom, self.fun, self.refs = dom, fun, refs
        self._unit_dom = _unit_rows(dom.vectors)
        self._unit_fun = _unit_rows(fun.vectors)
        self._ref_dom = self._unit_dom[[dom.rows.id(w) for w in refs.words]]
        self._ref_fun = self._unit_fun[[fun.rows.id(w) for w in refs.words]]

    def __contains__(self, word):
        return word in self.dom and word in self.fun

    def sims(self, word: str) -> tuple[np.ndarray, np.ndarray]:
        d = np.clip(self._ref_dom @ self._unit_dom[self.dom.rows.id(word)], -1.0, 1.0)
        f = np.clip(self._ref_fun @ self._unit_fun[self.fun.rows.id(word)], -1.0, 1.0)
        return d, f

    def features(self, a: str, b: str) -> PairFeatureVector:
        for w in (a, b):
            if w not in self:
                raise KeyError(f"unknown term for SimDiffs: {w!r}")
        da, fa = self.sims(a)
        db, fb = self.sims(b)
        values = np.concatenate([da - db, fa - fb, da - fb, fa - db])
        return PairFeatureVector(a, b, values, "simdiffs")


def simdiffs_features(dom: Embedding, fun: Embedding, R: ReferenceSet,
                      a: str, b: str) -> PairFeatureVector:
    return SimDiffsSpace(dom, fun, R).features(a, b)


@dataclass
class FeatureBatch:
    pairs: list
    X: np.ndarray
    kept: list
    skipped: list

    @property
    def dim(self):
        return self.X.shape[1]


def batch_features(pairs, scheme: str, resources) -> FeatureBatch:
    """Featurize ``(a, b)`` pairs in input order.

    ``resources`` is an :class:`Embedding` for ConVecs or a
    :class:`SimDiffsSpace` for SimDiffs.  Pairs with unknown terms are listed
    in ``skipped`` (as input indices) rather than raising.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    pairs = [(p[0], p[1]) for p in pairs]
    if scheme == "convecs":
        known = lambda w: w in resources
        make = lambda a, b: convecs_features(resources, a, b)
        dim = 2 * resources.k
    else:
        known = lambda w: w in resources
        make = resources.features
        dim = 4 * len(resources.refs)
    rows, kept, skipped = [], [], []
    for i, (a, b) in enumerate(pairs):
        if known(a) and known(b):
            rows.append(make(a, b).values)
            kept.append(i)
        else:
            skipped.append(i)
    X = np.vstack(rows) if rows else np.zeros((0, dim))
    return FeatureBatch(pairs, X, kept, skipped)


def save_features(path, batch: FeatureBatch, labels, scheme: str):
    from .vsm import _atomic_write
    lines = [f"scheme={scheme} dim={batch.dim}"]
    for row, i in zip(batch.X, batch.kept):
        a, b = batch.pairs[i]
        lines.append(f"{a}\t{b}\t{int(labels[i])}\t" + ",".join(f"{x:.17g}" for x in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def load_features(path):
    """Returns ``(scheme, pairs, labels, X)``."""
    with open(path, encoding="utf-8") as fh:
        header = dict(kv.split("=", 1) for kv in fh.readline().split())
        pairs, labels, rows = [], [], []
        for line in fh:
            if not line.strip():
                continue
            a, b, label, vals = line.rstrip("\n").split("\t")
            pairs.append((a, b))
            labels.append(int(label))
            rows.append([float(x) for x in vals.split(",")])
    dim = int(header["dim"])
    X = np.array(rows, dtype=np.float64).reshape(len(rows), dim)
    return header["scheme"], pairs, np.array(labels, dtype=np.int64), X
