"""Recognizing lexical entailment with word-context vector spaces."""

from .vsm import (Vocabulary, ContextKey, CoMatrix, PpmiMatrix, SvdFactors, Embedding,
                  FeatureSet, count_cooccurrences, ppmi, truncated_svd, project, cosine,
                  row_features)
from .balapinc import BalapincParams, BalapincScorer, rel, apinc, lin, classify, tune_threshold
from .features import ReferenceSet, SimDiffsSpace, convecs_features, simdiffs_features, batch_features
from .metrics import (RankedList, ConfusionMatrix, MetricsReport, average_precision, metrics,
                      wilson_interval, fisher_exact)
from .folds import FoldPlan, make_folds
from .datasets import (RelationTaxonomy, RatedPair, LabeledPair, jmth_transform, mapping_label,
                       split_dev_test, load_pairs, save_pairs)

__version__ = "0.1.0"

__all__ = [
    "Vocabulary",
    "ContextKey",
    "CoMatrix",
    "PpmiMatrix",
    "SvdFactors",
    "Embedding",
    "FeatureSet",
    "count_cooccurrences",
    "ppmi",
    "truncated_svd",
    "project",
    "cosine",
    "row_features",
    "BalapincParams",
    "rel",
    "apinc",
    "lin",
    "BalapincScorer",
    "classify",
    "tune_threshold",
    "ReferenceSet",
    "SimDiffsSpace",
    "convecs_features",
    "simdiffs_features",
    "batch_features",
    "RankedList",
    "ConfusionMatrix",
    "MetricsReport",
    "average_precision",
    "metrics",
    "wilson_interval",
    "fisher_exact",
    "FoldPlan",
    "make_folds",
    "RelationTaxonomy",
    "RatedPair",
    "LabeledPair",
    "jmth_transform",
    "mapping_label",
    "split_dev_test",
    "load_pairs",
    "save_pairs",
]
