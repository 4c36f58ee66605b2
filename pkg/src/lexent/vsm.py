"""Word-context matrices: counting, PPMI weighting, truncated SVD and projection.

Matrices are stored as ``scipy.sparse.csr_matrix`` with explicit row and
column label lists.  All containers are treated as immutable once built.
"""

from __future__ import annotations

import logging
import re
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import svds

logger = logging.getLogger(__name__)

SIDES = ("left", "right")
POS_CLASSES = ("any", "noun", "verb")
POLICIES = ("general", "domain", "function")

_TAGGED = re.compile(r"^(.+)_([A-Z$][A-Z$.,:()#`'-]*|[.,:()#`'-]+)$")


class Vocabulary:
    """Ordered list of distinct terms with a term -> row id index."""

    def __init__(self, terms: Iterable[str]):
        self.terms = tuple(terms)
        self.index = {t: i for i, t in enumerate(self.terms)}
        if len(self.index) != len(self.terms):
            dup = [t for t, c in Counter(self.terms).items() if c > 1]
            raise ValueError(f"duplicate vocabulary terms: {dup[:5]}")

    def __len__(self):
        return len(self.terms)

    def __contains__(self, term):
        return term in self.index

    def __iter__(self):
        return iter(self.terms)

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.terms == other.terms

    def __hash__(self):
        return hash(self.terms)

    def __repr__(self):
        return f"Vocabulary({len(self.terms)} terms)"

    def id(self, term: str) -> int:
        try:
            return self.index[term]
        except KeyError:
            raise KeyError(f"unknown term: {term!r}") from None

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            return cls(line.rstrip("\n") for line in fh if line.strip())

    def save(self, path):
        _atomic_write(path, "".join(t + "\n" for t in self.terms))


class ContextKey(NamedTuple):
    """A context column: the token, which side of the target it fell on, and its POS class."""

    token: str
    side: str
    pos: str = "any"

    def serialize(self) -> str:
        return f"{self.token}#{self.side}#{self.pos}"

    @classmethod
    def parse(cls, text: str) -> "ContextKey":
        token, side, pos = text.rsplit("#", 2)
        if side not in SIDES or pos not in POS_CLASSES:
            raise ValueError(f"malformed context key: {text!r}")
        return cls(token, side, pos)


@dataclass(frozen=True, eq=False)
class CoMatrix:
    """Raw co-occurrence counts (int64, zero cells absent)."""

    rows: Vocabulary
    cols: tuple
    counts: sp.csr_matrix
    oov_tokens: int = 0

    def __post_init__(self):
        if self.counts.shape != (len(self.rows), len(self.cols)):
            raise ValueError("count matrix shape does not match row/column labels")

    @property
    def nnz(self):
        return self.counts.nnz

    def get(self, term, context):
        j = self.cols.index(context) if context in self.cols else None
        if j is None or term not in self.rows:
            return 0
        return int(self.counts[self.rows.id(term), j])

    def merge(self, other: "CoMatrix") -> "CoMatrix":
        """Sum two count matrices over the same rows; columns are unioned."""
        if self.rows != other.rows:
            raise ValueError("cannot merge count matrices with different rows")
        cols = sorted(set(self.cols) | set(other.cols))
        col_id = {c: j for j, c in enumerate(cols)}
        total = sp.csr_matrix((len(self.rows), len(cols)), dtype=np.int64)
        for m in (self, other):
            coo = m.counts.tocoo()
            remap = np.array([col_id[c] for c in m.cols], dtype=np.int64)
            total = total + sp.csr_matrix(
                (coo.data, (coo.row, remap[coo.col] if coo.nnz else coo.col)),
                shape=total.shape, dtype=np.int64)
        total.sort_indices()
        return CoMatrix(self.rows, tuple(cols), total, self.oov_tokens + other.oov_tokens)


@dataclass(frozen=True, eq=False)
class PpmiMatrix:
    """Positive PMI weights; every stored entry is strictly positive."""

    rows: Vocabulary
    cols: tuple
    weights: sp.csr_matrix
    log_base: str = "e"

    @property
    def shape(self):
        return self.weights.shape

    @property
    def density(self) -> float:
        n = self.weights.shape[0] * self.weights.shape[1]
        return self.weights.nnz / n if n else 0.0


@dataclass(frozen=True, eq=False)
class SvdFactors:
    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray
    rows: Vocabulary | None = None

    @property
    def k(self) -> int:
        return len(self.sigma)

    def truncate(self, k: int) -> "SvdFactors":
        if not 1 <= k <= self.k:
            raise ValueError(f"k={k} outside 1..{self.k}")
        return SvdFactors(self.U[:, :k], self.sigma[:k], self.V[:, :k], self.rows)

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.sigma) @ self.V.T


@dataclass(frozen=True, eq=False)
class Embedding:
    """Dense row space ``U_k diag(sigma^p)``."""

    space: str
    rows: Vocabulary
    vectors: np.ndarray
    p: float

    @property
    def k(self) -> int:
        return self.vectors.shape[1]

    def __contains__(self, term):
        return term in self.rows

    def vector(self, term: str) -> np.ndarray:
        return self.vectors[self.rows.id(term)]


@dataclass(frozen=True)
class FeatureSet:
    """Ranked contexts of one word, highest weight first."""

    word: str
    contexts: tuple
    weights: np.ndarray = field(compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_rank", {c: r for r, c in enumerate(self.contexts, 1)})

    def __len__(self):
        return len(self.contexts)

    def __contains__(self, context):
        return context in self._rank

    def rank(self, context) -> int | None:
        return self._rank.get(context)

    def weight(self, context) -> float:
        r = self._rank.get(context)
        return 0.0 if r is None else float(self.weights[r - 1])

    @classmethod
    def from_weights(cls, word, weights: dict, max_F: int | None = None) -> "FeatureSet":
        """Build from a ``{context: weight}`` mapping; zero weights are dropped.

        Equal weights are ordered by ascending context key.
        """
        items = sorted(((c, float(w)) for c, w in weights.items() if w > 0),
                       key=lambda cw: (-cw[1], cw[0]))
        if max_F is not None:
            items = items[:max_F]
        return cls(word, tuple(c for c, _ in items),
                   np.array([w for _, w in items], dtype=np.float64))


def parse_sentence(sentence) -> list[tuple[str, str | None]]:
    """Split a sentence into ``(word, tag)`` pairs; tag is None for untagged tokens."""
    tokens = sentence.split() if isinstance(sentence, str) else list(sentence)
    out = []
    for tok in tokens:
        if isinstance(tok, tuple):
            out.append(tok)
            continue
        m = _TAGGED.match(tok)
        out.append((m.group(1), m.group(2)) if m else (tok, None))
    return out


def pos_class(tag: str | None) -> str | None:
    if tag is None:
        return None
    t = tag.upper()
    if t.startswith("NN") or t in ("N", "NOUN", "NP", "NNP"):
        return "noun"
    if t.startswith("VB") or t in ("V", "VERB"):
        return "verb"
    return "other"


def count_cooccurrences(corpus, vocab: Vocabulary, window: int = 4,
                        policy: str = "general",
                        contexts: Vocabulary | None = None) -> CoMatrix:
    """Count context tokens within ``window`` positions of each vocabulary term.

    Multi-word terms (space separated in ``vocab``) are matched greedily,
    longest first; their contexts are the tokens just outside the span.
    Context tokens must be unigrams of ``contexts`` (default: ``vocab``);
    others are skipped and tallied in ``oov_tokens``.  The ``domain`` and
    ``function`` policies keep only noun and verb contexts respectively.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}")
    ctx_vocab = vocab if contexts is None else contexts
    keep = {"general": None, "domain": "noun", "function": "verb"}[policy]
    max_len = max((len(t.split()) for t in vocab), default=1)

    counter: Counter = Counter()
    oov = 0
    for n, sentence in enumerate(corpus):
        toks = parse_sentence(sentence)
        if not toks:
            continue
        if keep is not None and any(tag is None for _, tag in toks):
            raise ValueError(f"sentence {n} is not POS-tagged but policy={policy!r} "
                             f"needs tags: {sentence if isinstance(sentence, str) else ' '.join(map(str, sentence))!r}")
        words = [w for w, _ in toks]
        classes = [pos_class(tag) for _, tag in toks]
        ctx_ok = [w in ctx_vocab.index for w in words]
        oov += ctx_ok.count(False)
        # longest vocabulary term starting at each position
        for i in range(len(words)):
            for length in range(min(max_len, len(words) - i), 0, -1):
                term = " ".join(words[i:i + length])
                if term not in vocab.index:
                    continue
                row = vocab.index[term]
                for side, rng in (("left", range(max(0, i - window), i)),
                                  ("right", range(i + length, min(len(words), i + length + window)))):
                    for j in rng:
                        if not ctx_ok[j]:
                            continue
                        if keep is not None and classes[j] != keep:
                            continue
                        counter[(row, ContextKey(words[j], side, keep or "any"))] += 1
                break
    cols = sorted({c for _, c in counter})
    col_id = {c: j for j, c in enumerate(cols)}
    if counter:
        r, c, v = zip(*((row, col_id[ck], cnt) for (row, ck), cnt in counter.items()))
    else:
        r = c = v = ()
    counts = sp.csr_matrix((np.asarray(v, dtype=np.int64),
                            (np.asarray(r, dtype=np.int64), np.asarray(c, dtype=np.int64))),
                           shape=(len(vocab), len(cols)), dtype=np.int64)
    counts.sort_indices()
    if oov:
        logger.info("skipped %d out-of-vocabulary context tokens", oov)
    return CoMatrix(vocab, tuple(cols), counts, oov)


def ppmi(counts) -> PpmiMatrix:
    """Positive pointwise mutual information (natural log) of a count matrix.

    Accepts a :class:`CoMatrix`, a scipy sparse matrix or a dense array.
    """
    if isinstance(counts, CoMatrix):
        F, rows, cols = counts.counts, counts.rows, counts.cols
    else:
        F = sp.csr_matrix(counts)
        rows = Vocabulary(str(i) for i in range(F.shape[0]))
        cols = tuple(str(j) for j in range(F.shape[1]))
    F = sp.csr_matrix(F, dtype=np.float64)
    F.eliminate_zeros()
    if (F.data < 0).any():
        raise ValueError("counts must be nonnegative")
    total = F.sum()
    if total <= 0:
        raise ValueError("count matrix is all zero")
    row_p = np.asarray(F.sum(axis=1)).ravel() / total
    col_p = np.asarray(F.sum(axis=0)).ravel() / total
    coo = F.tocoo()
    pmi = np.log((coo.data / total) / (row_p[coo.row] * col_p[coo.col]))
    keep = pmi > 0
    X = sp.csr_matrix((pmi[keep], (coo.row[keep], coo.col[keep])), shape=F.shape)
    X.sort_indices()
    return PpmiMatrix(rows, cols, X, "e")


def truncated_svd(matrix, k: int, seed: int = 0) -> SvdFactors:
    """Top-``k`` singular triplets, largest first.

    Small problems (or ``k`` close to full rank) use a dense LAPACK SVD;
    otherwise ARPACK Lanczos on the sparse matrix with a seeded start vector.
    Column signs are fixed so the largest-magnitude entry of each left
    singular vector is positive.
    """
    rows = None
    if isinstance(matrix, PpmiMatrix):
        rows, X = matrix.rows, matrix.weights
    else:
        X = matrix
    m, n = X.shape
    if not 1 <= k <= min(m, n):
        raise ValueError(f"k={k} must lie in 1..{min(m, n)}")
    if sp.issparse(X) and k < min(m, n) - 1 and min(m, n) > 400:
        rng = np.random.default_rng(seed)
        v0 = rng.uniform(-1.0, 1.0, size=min(m, n))
        U, s, Vt = svds(sp.csr_matrix(X, dtype=np.float64), k=k, tol=1e-10, v0=v0,
                        solver="arpack")
        order = np.argsort(-s, kind="stable")
        U, s, Vt = U[:, order], s[order], Vt[order]
    else:
        dense = X.toarray() if sp.issparse(X) else np.asarray(X, dtype=np.float64)
        U, s, Vt = np.linalg.svd(dense, full_matrices=False)
        U, s, Vt = U[:, :k], s[:k], Vt[:k]
    pivot = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[pivot, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return SvdFactors(np.ascontiguousarray(U * signs), np.clip(s, 0.0, None),
                      np.ascontiguousarray(Vt.T * signs), rows)


def project(factors: SvdFactors, p: float, space: str = "general",
            rows: Vocabulary | None = None) -> Embedding:
    """Row vectors of ``U_k diag(sigma**p)``."""
    if not 0.0 <= p <= 1.0:
        warnings.warn(f"exponent p={p} outside [0, 1]", stacklevel=2)
    if space not in POLICIES:
        raise ValueError(f"unknown space {space!r}")
    rows = rows or factors.rows or Vocabulary(str(i) for i in range(factors.U.shape[0]))
    vectors = factors.U * np.power(factors.sigma, p)
    if not np.isfinite(vectors).all():
        raise FloatingPointError("non-finite embedding entries")
    return Embedding(space, rows, vectors, float(p))


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    return v / n if n > 0 else np.zeros_like(v)


def cosine(emb: Embedding, a: str, b: str) -> float:
    """Cosine of two rows; 0 when either row is all zero."""
    u, v = emb.vector(a), emb.vector(b)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 0.0
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def row_features(matrix: PpmiMatrix, word: str, max_F: int | None = None) -> FeatureSet:
    i = matrix.rows.id(word)
    start, end = matrix.weights.indptr[i], matrix.weights.indptr[i + 1]
    cols = matrix.weights.indices[start:end]
    vals = matrix.weights.data[start:end]
    return FeatureSet.from_weights(word, {matrix.cols[j]: w for j, w in zip(cols, vals)}, max_F)


# -- file formats -----------------------------------------------------------

def _atomic_write(path, text: str):
    import os
    import tempfile
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _label(c) -> str:
    return c.serialize() if isinstance(c, ContextKey) else str(c)


def save_matrix(matrix, path):
    """Write ``path`` plus ``path.rows`` / ``path.cols`` label files."""
    if isinstance(matrix, CoMatrix):
        M, kind = matrix.counts, "counts"
    else:
        M, kind = matrix.weights, "ppmi"
    M = sp.csr_matrix(M)
    M.sort_indices()
    lines = [f"rows={M.shape[0]} cols={M.shape[1]} kind={kind} log=e"]
    coo = M.tocoo()
    for i, j, v in zip(coo.row, coo.col, coo.data):
        lines.append(f"{i}\t{j}\t{int(v) if kind == 'counts' else repr(float(v))}")
    _atomic_write(path, "\n".join(lines) + "\n")
    matrix.rows.save(f"{path}.rows")
    _atomic_write(f"{path}.cols", "".join(_label(c) + "\n" for c in matrix.cols))


def load_matrix(path):
    with open(path, encoding="utf-8") as fh:
        header = dict(kv.split("=", 1) for kv in fh.readline().split())
        entries = [line.split("\t") for line in fh if line.strip()]
    shape = (int(header["rows"]), int(header["cols"]))
    kind = header["kind"]
    rows = Vocabulary.load(f"{path}.rows")
    with open(f"{path}.cols", encoding="utf-8") as fh:
        labels = [line.rstrip("\n") for line in fh if line.strip()]
    cols = tuple(ContextKey.parse(c) if c.count("#") >= 2 else c for c in labels)
    dtype = np.int64 if kind == "counts" else np.float64
    r = np.array([int(e[0]) for e in entries], dtype=np.int64)
    c = np.array([int(e[1]) for e in entries], dtype=np.int64)
    v = np.array([float(e[2]) for e in entries], dtype=dtype)
    M = sp.csr_matrix((v, (r, c)), shape=shape, dtype=dtype)
    if kind == "counts":
        return CoMatrix(rows, cols, M)
    return PpmiMatrix(rows, cols, M, header.get("log", "e"))


def save_embedding(emb: Embedding, path):
    lines = [f"k={emb.k} p={float(emb.p)!r} space={emb.space}"]
    for term, vec in zip(emb.rows, emb.vectors):
        lines.append(term + "\t" + "\t".join(f"{x:.17g}" for x in vec))
    _atomic_write(path, "\n".join(lines) + "\n")


def load_embedding(path) -> Embedding:
    with open(path, encoding="utf-8") as fh:
        header = dict(kv.split("=", 1) for kv in fh.readline().split())
        terms, vecs = [], []
        for line in fh:
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            terms.append(parts[0])
            vecs.append([float(x) for x in parts[1:]])
    k = int(header["k"])
    vectors = np.array(vecs, dtype=np.float64).reshape(len(terms), k)
    return Embedding(header["space"], Vocabulary(terms), vectors, float(header["p"]))
