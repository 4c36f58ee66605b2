from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from lexent import datasets as ds
from lexent.datasets import LabeledPair, RatedPair, RelationTaxonomy
from lexent.synthetic import make_rated_pairs

TAX = RelationTaxonomy.load()


def rated_one(sid, n, ratings=None):
    ratings = ratings or list(range(n))
    return [RatedPair(f"a{i:02d}", f"b{i:02d}", sid, float(r)) for i, r in enumerate(ratings)]


class TestTaxonomy:
    def test_shape_and_bit_totals(self):
        assert len(TAX) == 79
        assert sum(r.a_entails_b for r in TAX.entries) == 25
        assert sum(r.b_entails_a for r in TAX.entries) == 12
        assert len({r.id for r in TAX.entries}) == 79

    @pytest.mark.parametrize("rid,inverted,label", [("8f", False, 1), ("8f", True, 0),
                                                     ("3a", False, 1), ("3a", True, 1),
                                                     ("2i", False, 0), ("2i", True, 0)])
    def test_mapping(self, rid, inverted, label):
        assert ds.mapping_label(rid, inverted, TAX) == label

    def test_unknown_id(self):
        with pytest.raises(KeyError):
            TAX["99z"]

    def test_malformed_file(self, tmp_path):
        (tmp_path / "t.tsv").write_text("1a\tclass\tsub\tx:y\t2\t0\n")
        with pytest.raises(ValueError, match="line 1"):
            RelationTaxonomy.load(tmp_path / "t.tsv")


class TestClean:
    def test_removes_lowest(self):
        kept = ds.clean(rated_one("8f", 12))
        assert [p.rating for p in kept] == [10.0, 11.0]

    def test_tie_removes_later_pair(self):
        # ratings: a00..a08 low, then a09 and a10 tie for the 10th/11th spot
        ratings = list(range(9)) + [50, 50, 99]
        kept = ds.clean(rated_one("8f", 12, ratings))
        assert sorted(p.a for p in kept) == ["a09", "a11"]

    def test_short_subcategory_keeps_one(self):
        report = ds.JmthReport()
        kept = ds.clean(rated_one("3a", 7), report=report)
        assert len(kept) == 1 and kept[0].rating == 6.0
        assert report.short_subcategories == ["3a"]


class TestJmth:
    def test_single_subcategory(self):
        pairs, report = ds.jmth_transform(rated_one("8f", 12), TAX)
        assert (report.after_clean, report.after_double) == (2, 4)
        assert sorted(p.label for p in pairs) == [0, 0, 1, 1]
        assert report.final == 4

    def test_empty(self):
        pairs, report = ds.jmth_transform([], TAX)
        assert pairs == [] and report.final == 0 and report.after_double == 0

    def test_unknown_subcategory(self):
        with pytest.raises(ValueError, match="unknown subcategory"):
            ds.jmth_transform([RatedPair("a", "b", "zz", 1.0)], TAX)

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 1000))
    def test_step_invariants(self, seed):
        rated = make_rated_pairs(seed=seed, sizes=(12, 20))
        pairs, report = ds.jmth_transform(rated, TAX, seed=seed)
        assert report.after_double == 2 * report.after_clean
        per_sub = Counter(p.subcategory_id for p in ds.clean(rated))
        expected_ones = sum(n * (TAX[s].a_entails_b + TAX[s].b_entails_a) for s, n in per_sub.items())
        assert report.ones == expected_ones
        n1 = sum(p.label for p in pairs)
        assert n1 == len(pairs) - n1 == report.ones
        assert not report.removed_ones

    def test_deterministic(self):
        rated = make_rated_pairs(seed=3)
        assert ds.jmth_transform(rated, TAX, seed=1)[0] == ds.jmth_transform(rated, TAX, seed=1)[0]

    def test_doubled_pairs_are_reverses(self):
        rated = make_rated_pairs(seed=2, sizes=(11, 12))
        pairs, _ = ds.jmth_transform(rated, TAX, seed=0)
        by_rel = {(p.a, p.b): p.relation_id for p in pairs}
        for (a, b), rid in by_rel.items():
            base, inverted = ds.split_relation_id(rid)
            assert base in TAX
            if (b, a) in by_rel:
                assert ds.split_relation_id(by_rel[(b, a)]) == (base, not inverted)


class TestSplit:
    def _balanced(self, n_per_class):
        return [LabeledPair(f"a{i}", f"b{i}", i % 2) for i in range(2 * n_per_class)]

    def test_known_sizes(self):
        dev1, dev2, test, report = ds.split_dev_test(self._balanced(1154), seed=0)
        assert report.sizes == (768, 768, 772)
        assert report.balanced

    def test_small(self):
        dev1, dev2, test, report = ds.split_dev_test(self._balanced(6), seed=0)
        assert report.sizes == (4, 4, 4) and report.ones == (2, 2, 2)

    def test_deterministic_and_disjoint(self):
        data = self._balanced(50)
        a = ds.split_dev_test(data, seed=9)
        b = ds.split_dev_test(data, seed=9)
        assert a[:3] == b[:3]
        seen = [p for part in a[:3] for p in part]
        assert len(seen) == len(set(seen)) == len(data)


class TestFiles:
    def test_roundtrip(self, tmp_path):
        pairs, _ = ds.jmth_transform(make_rated_pairs(seed=0, sizes=(11, 13)), TAX)
        ds.save_pairs(pairs, tmp_path / "p.tsv")
        assert ds.load_pairs(tmp_path / "p.tsv") == pairs

    def test_comments_and_blanks(self, tmp_path):
        (tmp_path / "p.tsv").write_text("# header\n\na\tb\t1\n  \nc\td\t0\tx\n")
        assert ds.load_pairs(tmp_path / "p.tsv") == [LabeledPair("a", "b", 1),
                                                     LabeledPair("c", "d", 0, "x")]

    def test_bad_label(self, tmp_path):
        (tmp_path / "p.tsv").write_text("a\tb\t1\na\tb\t2\n")
        with pytest.raises(ValueError, match=":2:"):
            ds.load_pairs(tmp_path / "p.tsv")

    def test_rated_roundtrip(self, tmp_path):
        rated = make_rated_pairs(seed=1, sizes=(2, 3))
        ds.save_rated_pairs(rated, tmp_path / "r.tsv")
        assert ds.load_rated_pairs(tmp_path / "r.tsv") == rated

    def test_known_sizes(self):
        pairs = [LabeledPair(str(i), "x", int(i < 1385)) for i in range(2770)]
        assert ds.check_known_sizes(pairs, "BBDS")
        assert not ds.check_known_sizes(pairs[:-1], "bbds")

    def test_balance(self):
        pairs = [LabeledPair(str(i), "x", int(i < 3)) for i in range(10)]
        out = ds.balance(pairs, seed=0)
        assert ds.class_sizes(out) == (6, 3, 3)
