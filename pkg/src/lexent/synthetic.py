"""A toy corpus with planted context inclusion, for end-to-end checks.

Two topics each have broad terms and narrow terms.  A narrow term is only
ever seen with a subset of the contexts of its broad term, so narrow:broad
pairs are entailing and their reverses are not.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import LabeledPair, RatedPair, RelationTaxonomy


@dataclass
class ToyWorld:
    sentences: list
    vocab: list
    broad: dict        # topic -> list of broad terms
    narrow: dict       # narrow term -> its broad term
    topic_of: dict
    contexts: dict     # target term -> list of tagged context tokens


def make_world(seed: int = 0, n_topics: int = 2, broad_per_topic: int = 5,
               narrow_per_broad: int = 10, nouns_per_topic: int = 23,
               verbs_per_topic: int = 22, broad_ctx: int = 14, narrow_ctx: int = 6,
               sentences_per_narrow: int = 30, sentences_per_broad: int = 120,
               window: int = 2) -> ToyWorld:
    """Build the corpus; the default sizes give a 200-word vocabulary."""
    rng = np.random.default_rng(seed)
    broad, narrow, topic_of, contexts = {}, {}, {}, {}
    vocab = []
    sentences = []
    for t in range(n_topics):
        pool = [f"n{t}x{i}_NN" for i in range(nouns_per_topic)] + \
               [f"v{t}x{i}_VB" for i in range(verbs_per_topic)]
        vocab += [tok.rsplit("_", 1)[0] for tok in pool]
        broad[t] = []
        for b in range(broad_per_topic):
            bw = f"broad{t}_{b}"
            broad[t].append(bw)
            topic_of[bw] = t
            ctx = list(rng.choice(pool, size=broad_ctx, replace=False))
            contexts[bw] = ctx
            for n in range(narrow_per_broad):
                nw = f"narrow{t}_{b}_{n}"
                narrow[nw] = bw
                topic_of[nw] = t
                contexts[nw] = list(rng.choice(ctx, size=narrow_ctx, replace=False))
    targets = [w for t in broad for w in broad[t]] + list(narrow)
    vocab = targets + vocab
    for w in targets:
        count = sentences_per_broad if w in topic_of and w not in narrow else sentences_per_narrow
        ctx = contexts[w]
        for _ in range(count):
            left = rng.choice(ctx, size=window)
            right = rng.choice(ctx, size=window)
            sentences.append(" ".join([*left, f"{w}_NN", *right]))
    order = rng.permutation(len(sentences))
    return ToyWorld([sentences[i] for i in order], vocab, broad, narrow, topic_of, contexts)


def make_pairs(world: ToyWorld, n_pairs: int = 200, seed: int = 0) -> list[LabeledPair]:
    """Balanced dataset: narrow:own-broad pairs are 1; reversed pairs,
    narrow:other-broad pairs and narrow:narrow pairs are 0."""
    rng = np.random.default_rng(seed)
    half = n_pairs // 2
    narrows = sorted(world.narrow)
    chosen = [narrows[i] for i in rng.choice(len(narrows), size=half, replace=False)]
    pos = [LabeledPair(n, world.narrow[n], 1, "planted") for n in chosen]
    all_broad = [b for t in sorted(world.broad) for b in world.broad[t]]
    neg = []
    n_rev = half // 2
    for n in chosen[:n_rev]:
        neg.append(LabeledPair(world.narrow[n], n, 0, "reversed"))
    seen = {(p.a, p.b) for p in pos + neg}
    while len(neg) < half:
        a = narrows[rng.integers(len(narrows))]
        if rng.random() < 0.5:
            b = all_broad[rng.integers(len(all_broad))]
            if b == world.narrow[a]:
                continue
            rid = "other-broad"
        else:
            b = narrows[rng.integers(len(narrows))]
            if b == a:
                continue
            rid = "narrow-narrow"
        if (a, b) in seen:
            continue
        seen.add((a, b))
        neg.append(LabeledPair(a, b, 0, rid))
    pairs = pos + neg
    return [pairs[i] for i in rng.permutation(len(pairs))]


def make_rated_pairs(taxonomy: RelationTaxonomy | None = None, seed: int = 0,
                     sizes=(40, 41)) -> list[RatedPair]:
    """Rated relation instances for every subcategory, with random sizes in ``sizes``.

    Ratings are drawn on a coarse grid so that ties occur, as in real
    crowd-sourced ratings.
    """
    taxonomy = taxonomy or RelationTaxonomy.load()
    rng = np.random.default_rng(seed)
    out = []
    for rel in taxonomy.entries:
        n = int(rng.integers(sizes[0], sizes[1] + 1))
        for i in range(n):
            rating = float(rng.integers(-20, 21)) * 5.0
            out.append(RatedPair(f"x{rel.id}_{i}", f"y{rel.id}_{i}", rel.id, rating))
    return out
