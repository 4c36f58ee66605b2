import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lexent import balapinc as bp
from lexent.balapinc import BalapincParams, PairScore
from lexent.metrics import weighted_f
from lexent.vsm import FeatureSet, ppmi


def fs(contexts, weights=None):
    contexts = tuple(contexts)
    if weights is None:
        weights = [float(len(contexts) - i) for i in range(len(contexts))]
    return FeatureSet("w", contexts, np.asarray(weights, dtype=np.float64))


def apinc_oracle(u, v):
    """Direct evaluation of inc(r), P(r) and rel with exact fractions."""
    if not u:
        return Fraction(0)
    total = Fraction(0)
    for r in range(1, len(u) + 1):
        inc = len(set(u[:r]) & set(v))
        P = Fraction(inc, r)
        f = u[r - 1]
        rel = 1 - Fraction(v.index(f) + 1, len(v) + 1) if f in v else Fraction(0)
        total += P * rel
    return total / len(u)


def ordered_subsets(universe, max_size):
    for k in range(max_size + 1):
        yield from itertools.permutations(universe, k)


feature_sets = st.lists(st.sampled_from([f"c{i}" for i in range(12)]), unique=True,
                        max_size=10)


class TestRel:
    def test_first_of_two(self):
        assert bp.rel("a", fs("ab")) == pytest.approx(2 / 3)

    def test_absent(self):
        assert bp.rel("z", fs("ab")) == 0.0

    def test_last(self):
        assert bp.rel("e", fs("abcde")) == pytest.approx(1 / 6)


class TestApinc:
    def test_identity_half(self):
        for n in range(1, 20):
            F = fs([f"c{i}" for i in range(n)])
            assert bp.apinc(F, F) == pytest.approx(0.5, abs=1e-12)

    def test_disjoint(self):
        assert bp.apinc(fs("ab"), fs("cd")) == 0.0

    def test_hand_case(self):
        assert bp.apinc(fs(["f1", "f2"]), fs(["f2"])) == pytest.approx(0.125, abs=1e-15)

    def test_empty(self):
        assert bp.apinc(fs([]), fs("ab")) == 0.0

    def test_oracle_exhaustive_up_to_relabeling(self):
        """Every ordered Fu against a canonical Fv of each size, six features.

        APinc only sees ranks, so renaming features maps any (Fu, Fv) onto a
        case with Fv = (f0, ..., f_{m-1}); this covers all cases up to renaming.
        """
        universe = [f"f{i}" for i in range(6)]
        worst = 0.0
        for m in range(7):
            v = tuple(universe[:m])
            Fv = fs(v)
            for u in ordered_subsets(universe, 6):
                got = bp.apinc(fs(u), Fv)
                worst = max(worst, abs(got - float(apinc_oracle(u, v))))
        assert worst <= 1e-12

    @settings(max_examples=200, deadline=None)
    @given(feature_sets, feature_sets)
    def test_oracle_random(self, u, v):
        assert bp.apinc(fs(u), fs(v)) == pytest.approx(float(apinc_oracle(u, v)), abs=1e-12)


class TestLin:
    def test_identity(self):
        F = fs("abc", [3.0, 0.5, 0.1])
        assert bp.lin(F, F) == pytest.approx(1.0)

    def test_disjoint(self):
        assert bp.lin(fs("ab"), fs("cd")) == 0.0

    def test_hand_case(self):
        assert bp.lin(fs(["f1"], [2.0]), fs(["f1", "f2"], [1.0, 1.0])) == pytest.approx(0.75)

    def test_empty(self):
        assert bp.lin(fs([]), fs([])) == 0.0


class TestBalapinc:
    def test_identity(self):
        F = fs("abcd", [4.0, 2.0, 2.0, 1.0])
        assert bp.balapinc(F, F) == pytest.approx(math.sqrt(0.5), abs=1e-12)

    def test_hand_case(self):
        Fu = fs(["f1", "f2"], [2.0, 1.0])
        Fv = fs(["f2"], [1.0])
        assert bp.balapinc(Fu, Fv) == pytest.approx(0.25, abs=1e-15)

    def test_asymmetric(self):
        Fu = fs(["f1", "f2"], [2.0, 1.0])
        Fv = fs(["f2"], [1.0])
        assert bp.balapinc(Fu, Fv) != bp.balapinc(Fv, Fu)

    def test_narrow_into_broad_scores_higher(self):
        narrow = fs(["a", "b"], [2.0, 1.0])
        broad = fs(["a", "b", "c", "d", "e"], [5.0, 4.0, 3.0, 2.0, 1.0])
        assert bp.balapinc(narrow, broad) > bp.balapinc(broad, narrow)

    @settings(max_examples=200, deadline=None)
    @given(feature_sets, feature_sets)
    def test_range(self, u, v):
        Fu, Fv = fs(u), fs(v)
        for value in (bp.apinc(Fu, Fv), bp.lin(Fu, Fv), bp.balapinc(Fu, Fv)):
            assert 0.0 <= value <= 1.0

    @given(st.dictionaries(st.sampled_from("abcdefghij"), st.floats(0.01, 10), min_size=1),
           st.integers(1, 12))
    def test_truncation_shrinks(self, weights, cap):
        assert len(FeatureSet.from_weights("w", weights, cap)) <= len(FeatureSet.from_weights("w", weights))


class TestClassify:
    @pytest.mark.parametrize("score,T,label", [(0.3, 0.5, 0), (0.5, 0.5, 1), (0.7071, 0.7, 1)])
    def test_rule(self, score, T, label):
        assert bp.classify(score, BalapincParams(T=T)) == label
        assert bp.classify(score, T) == label

    def test_params_range(self):
        with pytest.raises(ValueError):
            BalapincParams(T=1.5)
        with pytest.raises(ValueError):
            BalapincParams(max_F=0)


class TestTuneThreshold:
    def test_separable(self):
        T = bp.tune_threshold([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
        assert T == pytest.approx(0.5)

    def test_accepts_pair_scores(self):
        scores = [PairScore("a", "b", s) for s in (0.9, 0.8, 0.2, 0.1)]
        assert bp.tune_threshold(scores, [1, 1, 0, 0]) == pytest.approx(0.5)

    def test_all_equal_scores(self):
        labels = [1, 1, 1, 0]
        T = bp.tune_threshold([0.4] * 4, labels)
        # predicting all 1 (T at the score) beats predicting all 0
        assert T == 0.4

    def test_single_class(self):
        with pytest.raises(ValueError):
            bp.tune_threshold([0.1, 0.2], [1, 1])

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 20), st.integers(0, 1)), min_size=2, max_size=25))
    def test_matches_scan_oracle(self, rows):
        scores = np.array([s / 20 for s, _ in rows])
        labels = np.array([lab for _, lab in rows])
        if len(set(labels.tolist())) < 2:
            return
        T = bp.tune_threshold(scores, labels)
        # oracle: every threshold on a grid finer than the score spacing
        grid = np.arange(-1, 43) / 40
        best = max(weighted_f(labels, (scores >= t).astype(int)) for t in grid)
        assert weighted_f(labels, (scores >= T).astype(int)) == pytest.approx(best, abs=1e-12)
        # no smaller candidate reaches the same F
        for t in bp.threshold_candidates(scores):
            if t < T:
                assert weighted_f(labels, (scores >= t).astype(int)) < best - 1e-15


class TestScorer:
    def test_scores_from_matrix(self):
        X = ppmi(np.array([[3, 1, 0, 0], [2, 2, 2, 2], [0, 0, 4, 1]]))
        scorer = bp.BalapincScorer(X)
        a, b = X.rows.terms[0], X.rows.terms[1]
        Fa = scorer.features(a)
        assert scorer.score(a, b) == pytest.approx(bp.balapinc(Fa, scorer.features(b)))
        assert scorer.features(a) is Fa

    def test_scores_roundtrip(self, tmp_path):
        scores = [PairScore("a", "b", 0.1 + 1e-17), PairScore("c", "d", 2 / 3)]
        bp.save_scores(tmp_path / "s.tsv", scores, [0, 1], BalapincParams(100, 0.25))
        back, labels = bp.load_scores(tmp_path / "s.tsv")
        assert back == scores and labels == [0, 1]
        assert (tmp_path / "s.tsv").read_text().startswith("# balapinc max_F=100 T=0.25")
