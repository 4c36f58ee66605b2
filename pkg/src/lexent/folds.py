"""Fold construction for the standard, clustered, balanced and different setups."""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field

import numpy as np

SETUPS = ("standard", "clustered", "balanced", "different")


@dataclass
class FoldPlan:
    setup: str
    folds: list
    seed: int
    leaked_terms: int = 0
    dropped: list = field(default_factory=list)
    train: np.ndarray | None = None
    test: np.ndarray | None = None

    def splits(self):
        """Yield ``(train_idx, test_idx)`` per fold, in fold order."""
        if self.setup == "different":
            yield self.train, self.test
            return
        for i, test in enumerate(self.folds):
            train = np.concatenate([f for j, f in enumerate(self.folds) if j != i])
            yield np.sort(train), test


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _components(pair_ids, pairs, blocked):
    """Group pairs that share any term not in ``blocked``."""
    uf = _UnionFind(len(pair_ids))
    first = {}
    for k, i in enumerate(pair_ids):
        for t in (pairs[i][0], pairs[i][1]):
            if t in blocked:
                continue
            if t in first:
                uf.union(first[t], k)
            else:
                first[t] = k
    groups = defaultdict(list)
    for k, i in enumerate(pair_ids):
        groups[uf.find(k)].append(i)
    return [sorted(g) for g in groups.values()]


def term_components(pairs, capacity: int | None = None):
    """Connected components of the shared-term graph, split to fit ``capacity``.

    An oversized component is broken by repeatedly disconnecting its rarest
    shared term (lowest pair count inside the component; ties by term), so
    the most common terms stay inside a single piece.
    """
    pairs = [(p[0], p[1]) for p in pairs]
    pieces = _components(list(range(len(pairs))), pairs, set())
    if capacity is None:
        return pieces
    done = []
    stack = [(piece, set()) for piece in pieces]
    while stack:
        piece, blocked = stack.pop()
        if len(piece) <= capacity:
            done.append(piece)
            continue
        freq = Counter(t for i in piece for t in set(pairs[i]))
        shared = [t for t, c in freq.items() if c > 1 and t not in blocked]
        if not shared:
            done.append(piece)
            continue
        rarest = min(shared, key=lambda t: (freq[t], t))
        blocked = blocked | {rarest}
        stack.extend((sub, blocked) for sub in _components(piece, pairs, blocked))
    return sorted(done, key=lambda g: g[0])


def count_leaked_terms(pairs, folds) -> int:
    """Number of distinct terms that occur in more than one fold."""
    where = defaultdict(set)
    for f, idx in enumerate(folds):
        for i in idx:
            where[pairs[i][0]].add(f)
            where[pairs[i][1]].add(f)
    return sum(1 for fs in where.values() if len(fs) > 1)


def _as_tuples(dataset):
    return [(p.a, p.b, p.label) if hasattr(p, "a") else tuple(p) for p in dataset]


def make_folds(dataset, setup: str = "standard", k: int = 10, seed: int = 0,
               test_dataset=None) -> FoldPlan:
    """Build a :class:`FoldPlan`.

    ``standard`` shuffles and deals indices into ``k`` near-equal folds.
    ``clustered`` assigns shared-term components, largest first, to the
    currently smallest fold (capacity ``ceil(N/k)``); the assignment does not
    depend on ``seed``.  ``balanced`` then removes random class-0 pairs from
    each fold until the classes are equal.  ``different`` trains on all of
    ``dataset`` and tests on ``test_dataset`` balanced by dropping class 0.
    """
    if setup not in SETUPS:
        raise ValueError(f"unknown setup {setup!r}")
    pairs = _as_tuples(dataset)
    n = len(pairs)
    if n == 0:
        raise ValueError("dataset is empty")
    rng = np.random.default_rng(seed)

    if setup == "different":
        if test_dataset is None:
            raise ValueError("the different setup needs a test dataset")
        test = _as_tuples(test_dataset)
        labels = np.array([p[2] for p in test])
        ones, zeros = np.flatnonzero(labels == 1), np.flatnonzero(labels == 0)
        dropped = []
        if len(zeros) > len(ones):
            dropped = sorted(rng.choice(zeros, size=len(zeros) - len(ones), replace=False).tolist())
        keep = np.setdiff1d(np.arange(len(test)), dropped)
        return FoldPlan(setup, [], seed, 0, dropped, np.arange(n), keep)

    if k < 2:
        raise ValueError("k must be >= 2")
    if k > n:
        raise ValueError(f"k={k} exceeds dataset size {n}")

    if setup == "standard":
        perm = rng.permutation(n)
        folds = [np.sort(f) for f in np.array_split(perm, k)]
        return FoldPlan(setup, folds, seed, count_leaked_terms(pairs, folds))

    capacity = math.ceil(n / k)
    pieces = term_components(pairs, capacity)
    pieces.sort(key=lambda g: (-len(g), g[0]))
    buckets = [[] for _ in range(k)]
    for piece in pieces:
        target = min(range(k), key=lambda f: (len(buckets[f]), f))
        buckets[target].extend(piece)
    folds = [np.array(sorted(b), dtype=np.int64) for b in buckets]
    leaked = count_leaked_terms(pairs, folds)
    if setup == "clustered":
        return FoldPlan(setup, folds, seed, leaked)

    balanced, dropped = [], []
    for f in folds:
        labels = np.array([pairs[i][2] for i in f], dtype=np.int64)
        ones, zeros = f[labels == 1], f[labels == 0]
        big, small = (zeros, ones) if len(zeros) >= len(ones) else (ones, zeros)
        drop = rng.choice(big, size=len(big) - len(small), replace=False) if len(big) > len(small) else []
        dropped.extend(np.asarray(drop, dtype=np.int64).tolist())
        balanced.append(np.setdiff1d(f, drop))
    return FoldPlan(setup, balanced, seed, count_leaked_terms(pairs, balanced), sorted(dropped))
