"""
Word-context matrices, PPMI and truncated SVD
=============================================

Builds the three co-occurrence spaces from a small planted corpus, weights
them with PPMI and projects the general space with a truncated SVD.
"""

import numpy as np

from lexent import vsm
from lexent.synthetic import make_world

world = make_world(seed=0)
vocab = vsm.Vocabulary(world.vocab)
print(len(world.sentences), "sentences,", len(vocab), "row words")
print("example sentence:", world.sentences[0])

# general contexts keep the tagged word; domain keeps nouns, function keeps verbs
counts = {policy: vsm.count_cooccurrences(world.sentences, vocab, 4, policy)
          for policy in ("general", "domain", "function")}
for policy, C in counts.items():
    print(f"{policy:>8}: {C.counts.shape[0]} x {C.counts.shape[1]} counts, nnz={C.nnz}")

X = vsm.ppmi(counts["general"])
print("PPMI density: %.4f" % X.density)

# the strongest contexts of a broad term, highest weight first
broad = world.broad[0][0]
top = vsm.row_features(X, broad, max_F=5)
print(broad, [f"{c.side}:{c.token}" for c in top.contexts])

# reconstruction error shrinks as k grows
dense = X.weights.toarray()
for k in (5, 20, 60):
    f = vsm.truncated_svd(X, k)
    err = np.linalg.norm(f.reconstruct() - dense) / np.linalg.norm(dense)
    print(f"k={k:>3}  relative error {err:.3f}")

# p tilts the projection toward (p > 1) or away from (p < 1) the top components
f = vsm.truncated_svd(X, 40)
narrow = next(n for n, b in world.narrow.items() if b == broad)
for p in (0.0, 0.5, 1.0):
    emb = vsm.project(f, p)
    print(f"p={p:.1f}  cos({narrow}, {broad}) = {vsm.cosine(emb, narrow, broad):.3f}")
