"""
ConVecs and SimDiffs with an SVM
================================

ConVecs concatenates the two word vectors; SimDiffs describes a pair by how
its words' similarities to a reference vocabulary differ in a domain and a
function space. Both feed an RBF SVM with Platt-calibrated probabilities.
"""

import numpy as np

from lexent import experiments as ex
from lexent import svm, vsm
from lexent.features import ReferenceSet, SimDiffsSpace, convecs_features
from lexent.synthetic import make_pairs, make_world

world = make_world(seed=0)
vocab = vsm.Vocabulary(world.vocab)
spaces = {policy: vsm.ppmi(vsm.count_cooccurrences(world.sentences, vocab, 4, policy))
          for policy in ("general", "domain", "function")}
pairs = make_pairs(world, 200, seed=0)

emb = vsm.project(vsm.truncated_svd(spaces["general"], 40), 0.5)
p = pairs[0]
print(p.a, p.b, "ConVecs dimension:", convecs_features(emb, p.a, p.b).values.shape[0])

refs = ReferenceSet(tuple(world.vocab[110:]))
sd = SimDiffsSpace(vsm.project(vsm.truncated_svd(spaces["domain"], 40), 0.5, "domain"),
                   vsm.project(vsm.truncated_svd(spaces["function"], 40), 0.5, "function"),
                   refs)
print("SimDiffs dimension:", sd.features(p.a, p.b).values.shape[0])

# train on half, test on the other half
train, test = pairs[::2], pairs[1::2]
for name, method in (("ConVecs", ex.ConvecsMethod(emb)), ("SimDiffs", ex.SimdiffsMethod(sd))):
    report = ex.train_test(train, test, method.fit)
    print(f"{name:>8}: acc {report.acc:.1f}%  F {report.f:.3f}  AP1 {report.ap1:.3f}")

# the raw SVM on a toy problem: XOR is separable with an RBF kernel
X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
y = np.array([0, 0, 1, 1])
model = svm.train(X, y, svm.Kernel.rbf(1.0), svm.TrainConfig(C=10, calibration_folds=0))
print("XOR decision values:", np.round(svm.decision_values(model, X), 3))
