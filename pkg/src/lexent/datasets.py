"""Labeled word-pair datasets and the relation-to-entailment conversion pipeline."""

from __future__ import annotations

import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

logger = logging.getLogger(__name__)

INVERSE_SUFFIX = "^-1"

# (pairs, ones, zeros) published for the two public datasets
KNOWN_SIZES = {
    "kdsz": (3772, 1068, 2704),
    "bbds": (2770, 1385, 1385),
}


@dataclass(frozen=True)
class Relation:
    id: str
    category: str
    subcategory: str
    example: str
    a_entails_b: int
    b_entails_a: int


class RelationTaxonomy:
    """The 79 relation subcategories with their entailment directions."""

    def __init__(self, entries):
        self.entries = tuple(entries)
        self._by_id = {e.id: e for e in self.entries}
        if len(self._by_id) != len(self.entries):
            raise ValueError("duplicate relation ids in taxonomy")

    def __len__(self):
        return len(self.entries)

    def __contains__(self, rid):
        return rid in self._by_id

    def __getitem__(self, rid) -> Relation:
        try:
            return self._by_id[rid]
        except KeyError:
            raise KeyError(f"unknown relation id {rid!r}") from None

    @classmethod
    def load(cls, path=None) -> "RelationTaxonomy":
        """Read ``id, category, subcategory, example, ab_bit, ba_bit`` rows."""
        if path is None:
            text = resources.files("lexent").joinpath("data/taxonomy.tsv").read_text("utf-8")
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        entries = []
        for n, line in enumerate(text.splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 6 or parts[4] not in "01" or parts[5] not in "01":
                raise ValueError(f"taxonomy line {n} is malformed: {line!r}")
            entries.append(Relation(*parts[:4], int(parts[4]), int(parts[5])))
        return cls(entries)


@dataclass(frozen=True)
class RatedPair:
    a: str
    b: str
    subcategory_id: str
    rating: float


@dataclass(frozen=True)
class LabeledPair:
    a: str
    b: str
    label: int
    relation_id: str | None = None

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")


def split_relation_id(relation_id: str) -> tuple[str, bool]:
    if relation_id.endswith(INVERSE_SUFFIX):
        return relation_id[: -len(INVERSE_SUFFIX)], True
    return relation_id, False


def mapping_label(relation_id: str, inverted: bool, taxonomy: RelationTaxonomy) -> int:
    rel = taxonomy[relation_id]
    return rel.b_entails_a if inverted else rel.a_entails_b


@dataclass
class JmthReport:
    input: int = 0
    after_clean: int = 0
    after_double: int = 0
    ones: int = 0
    zeros: int = 0
    final: int = 0
    short_subcategories: list = field(default_factory=list)
    removed_ones: bool = False

    def lines(self) -> str:
        return (f"input={self.input}\nafter_clean={self.after_clean}\n"
                f"after_double={self.after_double}\nones={self.ones}\nzeros={self.zeros}\n"
                f"final={self.final}\nshort_subcategories={','.join(self.short_subcategories) or '-'}\n"
                f"removed_ones={int(self.removed_ones)}\n")


def clean(rated, n_remove: int = 10, report: JmthReport | None = None):
    """Drop the ``n_remove`` lowest-rated pairs from each subcategory.

    Equal ratings are broken by removing the lexicographically later pair
    first.  Subcategories with at most ``n_remove`` pairs keep one pair.
    """
    groups: OrderedDict = OrderedDict()
    for i, rp in enumerate(rated):
        groups.setdefault(rp.subcategory_id, []).append(i)
    removed = set()
    for sid, idx in groups.items():
        k = n_remove
        if len(idx) <= n_remove:
            k = len(idx) - 1
            if report is not None:
                report.short_subcategories.append(sid)
            logger.warning("subcategory %s has only %d pairs", sid, len(idx))
        by_pair = sorted(idx, key=lambda i: (rated[i].a, rated[i].b), reverse=True)
        by_rating = sorted(by_pair, key=lambda i: rated[i].rating)
        removed.update(by_rating[:k])
    return [rp for i, rp in enumerate(rated) if i not in removed]


def jmth_transform(rated, taxonomy: RelationTaxonomy | None = None, seed: int = 0,
                   n_remove: int = 10) -> tuple[list[LabeledPair], JmthReport]:
    """Clean, double, map and balance rated relation pairs into entailment pairs."""
    taxonomy = taxonomy or RelationTaxonomy.load()
    rated = list(rated)
    report = JmthReport(input=len(rated))
    for rp in rated:
        if rp.subcategory_id not in taxonomy:
            raise ValueError(f"unknown subcategory {rp.subcategory_id!r} for pair {rp.a}:{rp.b}")
    kept = clean(rated, n_remove, report)
    report.after_clean = len(kept)

    doubled = [LabeledPair(rp.a, rp.b, mapping_label(rp.subcategory_id, False, taxonomy),
                           rp.subcategory_id) for rp in kept]
    doubled += [LabeledPair(rp.b, rp.a, mapping_label(rp.subcategory_id, True, taxonomy),
                            rp.subcategory_id + INVERSE_SUFFIX) for rp in kept]
    report.after_double = len(doubled)
    labels = np.array([p.label for p in doubled], dtype=np.int64)
    report.ones = int(labels.sum())
    report.zeros = len(labels) - report.ones

    rng = np.random.default_rng(seed)
    ones = np.flatnonzero(labels == 1)
    zeros = np.flatnonzero(labels == 0)
    if len(zeros) >= len(ones):
        drop = rng.choice(zeros, size=len(zeros) - len(ones), replace=False)
    else:
        report.removed_ones = True
        logger.warning("fewer zeros than ones; balancing by removing ones")
        drop = rng.choice(ones, size=len(ones) - len(zeros), replace=False)
    dropped = set(drop.tolist())
    final = [p for i, p in enumerate(doubled) if i not in dropped]
    report.final = len(final)
    return final, report


@dataclass
class SplitReport:
    sizes: tuple
    ones: tuple
    zeros: tuple

    @property
    def balanced(self) -> bool:
        return all(o == z for o, z in zip(self.ones, self.zeros))


def split_dev_test(dataset, seed: int = 0, proportions=(1 / 3, 1 / 3)):
    """Class-balanced random split into ``(dev1, dev2, test, report)``.

    Each dev split takes ``floor(n_class * proportion)`` pairs of each
    class; the test split takes the rest.
    """
    dataset = list(dataset)
    rng = np.random.default_rng(seed)
    parts = [[], [], []]
    for cls in (0, 1):
        idx = np.array([i for i, p in enumerate(dataset) if p.label == cls], dtype=np.int64)
        rng.shuffle(idx)
        n1 = int(len(idx) * proportions[0])
        n2 = int(len(idx) * proportions[1])
        parts[0].extend(idx[:n1].tolist())
        parts[1].extend(idx[n1:n1 + n2].tolist())
        parts[2].extend(idx[n1 + n2:].tolist())
    splits = [[dataset[i] for i in sorted(p)] for p in parts]
    ones = tuple(sum(p.label for p in s) for s in splits)
    report = SplitReport(tuple(len(s) for s in splits), ones,
                         tuple(len(s) - o for s, o in zip(splits, ones)))
    if not report.balanced:
        logger.warning("split is not exactly class-balanced: %s", report)
    return splits[0], splits[1], splits[2], report


def class_sizes(pairs) -> tuple[int, int, int]:
    ones = sum(p.label for p in pairs)
    return len(pairs), ones, len(pairs) - ones


def check_known_sizes(pairs, name: str) -> bool:
    """Compare ``(pairs, ones, zeros)`` against the published sizes of ``name``."""
    expected = KNOWN_SIZES[name.lower()]
    got = class_sizes(pairs)
    if got != expected:
        logger.warning("%s: expected %s pairs/ones/zeros, found %s", name, expected, got)
    return got == expected


def balance(pairs, seed: int = 0) -> list[LabeledPair]:
    """Randomly drop pairs of the larger class (normally class 0)."""
    pairs = list(pairs)
    rng = np.random.default_rng(seed)
    labels = np.array([p.label for p in pairs])
    big = 0 if (labels == 0).sum() >= (labels == 1).sum() else 1
    idx = np.flatnonzero(labels == big)
    excess = len(idx) - (len(labels) - len(idx))
    drop = set(rng.choice(idx, size=excess, replace=False).tolist()) if excess else set()
    return [p for i, p in enumerate(pairs) if i not in drop]


# -- file formats -----------------------------------------------------------

def _data_lines(path):
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            yield n, line.split("\t")


def load_pairs(path) -> list[LabeledPair]:
    pairs = []
    for n, parts in _data_lines(path):
        if len(parts) not in (3, 4):
            raise ValueError(f"{path}:{n}: expected 3 or 4 tab-separated fields")
        if parts[2] not in ("0", "1"):
            raise ValueError(f"{path}:{n}: label must be 0 or 1, got {parts[2]!r}")
        rid = parts[3] if len(parts) == 4 and parts[3] else None
        pairs.append(LabeledPair(parts[0], parts[1], int(parts[2]), rid))
    return pairs


def save_pairs(pairs, path):
    from .vsm import _atomic_write
    lines = []
    for p in pairs:
        fields = [p.a, p.b, str(p.label)]
        if p.relation_id is not None:
            fields.append(p.relation_id)
        lines.append("\t".join(fields))
    _atomic_write(path, "".join(line + "\n" for line in lines))


def load_rated_pairs(path) -> list[RatedPair]:
    out = []
    for n, parts in _data_lines(path):
        if len(parts) != 4:
            raise ValueError(f"{path}:{n}: expected a, b, subcategory_id, rating")
        try:
            rating = float(parts[3])
        except ValueError:
            raise ValueError(f"{path}:{n}: rating is not a number: {parts[3]!r}") from None
        out.append(RatedPair(parts[0], parts[1], parts[2], rating))
    return out


def save_rated_pairs(rated, path):
    from .vsm import _atomic_write
    _atomic_write(path, "".join(f"{r.a}\t{r.b}\t{r.subcategory_id}\t{float(r.rating)!r}\n" for r in rated))
