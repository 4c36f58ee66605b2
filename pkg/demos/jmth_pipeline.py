"""
From graded relation ratings to a balanced entailment dataset
=============================================================

Cleans the lowest-rated pairs of every subcategory, adds the inverse of each
pair, maps subcategories to entails / does-not-entail labels, balances the
classes and splits into two dev sets and a test set.
"""

from collections import Counter

from lexent import datasets as ds
from lexent.synthetic import make_rated_pairs

tax = ds.RelationTaxonomy.load()
print(len(tax), "subcategories in the bundled taxonomy")

rated = make_rated_pairs(tax, seed=0)
print(rated[0])

pairs, report = ds.jmth_transform(rated, tax, seed=0)
print(report.lines(), end="")

print("labels:", Counter(p.label for p in pairs))
dev1, dev2, test, split = ds.split_dev_test(pairs, seed=0)
print("dev1/dev2/test sizes:", split.sizes)
print("test class sizes:", ds.class_sizes(test))
