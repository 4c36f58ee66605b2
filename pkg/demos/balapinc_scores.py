"""
Asymmetric inclusion scores
===========================

balAPinc rewards pairs where the narrow term's top contexts are also highly
ranked contexts of the broad term, and penalises the reverse direction.
"""

import numpy as np

from lexent import balapinc as bp
from lexent import vsm
from lexent.synthetic import make_pairs, make_world

# a hand example: u's contexts are a prefix of v's
u = vsm.FeatureSet.from_weights("u", {"a": 3.0, "b": 2.0})
v = vsm.FeatureSet.from_weights("v", {"a": 5.0, "b": 4.0, "c": 3.0, "d": 1.0})
print("APinc(u,v) = %.4f  APinc(v,u) = %.4f" % (bp.apinc(u, v), bp.apinc(v, u)))
print("LIN(u,v)   = %.4f" % bp.lin(u, v))
print("balAPinc(u,v) = %.4f  balAPinc(v,u) = %.4f" % (bp.balapinc(u, v), bp.balapinc(v, u)))
print("balAPinc(u,u) = %.4f (always sqrt(1/2))" % bp.balapinc(u, u))

world = make_world(seed=0)
X = vsm.ppmi(vsm.count_cooccurrences(world.sentences, vsm.Vocabulary(world.vocab), 4))
pairs = make_pairs(world, 200, seed=0)

scorer = bp.BalapincScorer(X, max_F=20)
by_kind = {}
for p in pairs:
    by_kind.setdefault(p.relation_id, []).append(scorer.score(p.a, p.b))
for kind, scores in sorted(by_kind.items()):
    print(f"{kind:>14}: n={len(scores):>3}  mean score {np.mean(scores):.3f}")

# choose the threshold that maximises weighted F on one half, apply it to the other
scores = np.array([scorer.score(p.a, p.b) for p in pairs])
labels = np.array([p.label for p in pairs])
T = bp.tune_threshold(scores[::2], labels[::2])
acc = np.mean([bp.classify(s, T) == y for s, y in zip(scores[1::2], labels[1::2])])
print(f"T = {T:.4f}, held-out accuracy {100 * acc:.1f}%")
