import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from lexent import vsm
from lexent.vsm import ContextKey, FeatureSet, Vocabulary


def jacobi_svd(A, sweeps=60):
    """One-sided Jacobi SVD, used as an independent oracle for the LAPACK path."""
    U = np.array(A, dtype=np.float64, copy=True)
    n = U.shape[1]
    V = np.eye(n)
    for _ in range(sweeps):
        off = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                a = U[:, i] @ U[:, i]
                b = U[:, j] @ U[:, j]
                c = U[:, i] @ U[:, j]
                off = max(off, abs(c) / math.sqrt(a * b) if a * b > 0 else 0.0)
                if abs(c) < 1e-300:
                    continue
                zeta = (b - a) / (2 * c)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1 + zeta * zeta))
                cs = 1 / math.sqrt(1 + t * t)
                sn = cs * t
                Ui, Uj = U[:, i].copy(), U[:, j].copy()
                U[:, i], U[:, j] = cs * Ui - sn * Uj, sn * Ui + cs * Uj
                Vi, Vj = V[:, i].copy(), V[:, j].copy()
                V[:, i], V[:, j] = cs * Vi - sn * Vj, sn * Vi + cs * Vj
        if off < 1e-15:
            break
    s = np.linalg.norm(U, axis=0)
    order = np.argsort(-s)
    return np.sort(s)[::-1], U[:, order] / np.where(s[order] > 0, s[order], 1), V[:, order]


def ppmi_oracle(F):
    """Direct double loop over cells."""
    F = np.asarray(F, dtype=float)
    total = F.sum()
    out = np.zeros_like(F)
    for i in range(F.shape[0]):
        for j in range(F.shape[1]):
            if F[i, j] == 0:
                continue
            pmi = math.log((F[i, j] / total) / ((F[i].sum() / total) * (F[:, j].sum() / total)))
            out[i, j] = max(pmi, 0.0)
    return out


class TestVocabulary:
    def test_bijection(self):
        v = Vocabulary(["b", "a", "c"])
        assert [v.id(t) for t in v] == [0, 1, 2]
        assert "a" in v and "z" not in v

    def test_duplicate_rejected(self):
        with pytest.raises(ValueError):
            Vocabulary(["a", "a"])

    def test_unknown_term(self):
        with pytest.raises(KeyError):
            Vocabulary(["a"]).id("b")

    def test_roundtrip(self, tmp_path):
        v = Vocabulary(["x", "new york", "y"])
        v.save(tmp_path / "v.txt")
        assert Vocabulary.load(tmp_path / "v.txt") == v


class TestContextKey:
    def test_serialize_roundtrip(self):
        k = ContextKey("dog", "left", "noun")
        assert k.serialize() == "dog#left#noun"
        assert ContextKey.parse(k.serialize()) == k

    def test_sides_differ(self):
        assert ContextKey("a", "left") != ContextKey("a", "right")


class TestCounting:
    def test_hand_window(self):
        """'a b a', window 1: each word sees the other once on each side."""
        C = vsm.count_cooccurrences(["a b a"], Vocabulary(["a", "b"]), window=1)
        assert C.get("a", ContextKey("b", "right")) == 1
        assert C.get("a", ContextKey("b", "left")) == 1
        assert C.get("b", ContextKey("a", "left")) == 1
        assert C.get("b", ContextKey("a", "right")) == 1
        assert C.nnz == 4

    def test_window_reach(self):
        C = vsm.count_cooccurrences(["a x x b"], Vocabulary(["a", "b", "x"]), window=2)
        assert C.get("a", ContextKey("b", "right")) == 0
        C = vsm.count_cooccurrences(["a x x b"], Vocabulary(["a", "b", "x"]), window=3)
        assert C.get("a", ContextKey("b", "right")) == 1

    def test_empty_corpus(self):
        C = vsm.count_cooccurrences([], Vocabulary(["a"]))
        assert C.nnz == 0

    def test_multiword_longest_match(self):
        vocab = Vocabulary(["new york", "new", "big", "city"])
        C = vsm.count_cooccurrences(["big new york city"], vocab, window=1)
        assert C.get("new york", ContextKey("big", "left")) == 1
        assert C.get("new york", ContextKey("city", "right")) == 1
        assert C.get("new", ContextKey("big", "left")) == 0

    def test_oov_tallied(self):
        C = vsm.count_cooccurrences(["a zz b"], Vocabulary(["a", "b"]), window=2)
        assert C.oov_tokens == 1
        assert C.get("a", ContextKey("b", "right")) == 1

    def test_pos_policies(self):
        vocab = Vocabulary(["dog", "bark", "cat"])
        sent = ["cat_NN bark_VBZ dog_NN"]
        dom = vsm.count_cooccurrences(sent, vocab, 2, "domain")
        fun = vsm.count_cooccurrences(sent, vocab, 2, "function")
        assert dom.get("dog", ContextKey("cat", "left", "noun")) == 1
        assert dom.get("dog", ContextKey("bark", "left", "noun")) == 0
        assert fun.get("dog", ContextKey("bark", "left", "verb")) == 1
        assert all(c.pos == "verb" for c in fun.cols)

    def test_untagged_needs_general(self):
        with pytest.raises(ValueError, match="POS-tagged"):
            vsm.count_cooccurrences(["a b"], Vocabulary(["a", "b"]), 1, "domain")

    def test_counts_int64(self):
        C = vsm.count_cooccurrences(["a b"], Vocabulary(["a", "b"]), 1)
        assert C.counts.dtype == np.int64


class TestPpmi:
    def test_hand_case(self):
        X = vsm.ppmi(np.array([[4, 0], [2, 2]])).weights.toarray()
        expected = np.array([[math.log(4 / 3), 0.0], [0.0, math.log(2)]])
        np.testing.assert_allclose(X, expected, atol=1e-12)

    def test_uniform_is_empty(self):
        assert vsm.ppmi(np.full((3, 4), 7)).weights.nnz == 0

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError):
            vsm.ppmi(np.zeros((2, 2)))

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(5)
        F = rng.integers(0, 6, size=(7, 9)) * (rng.random((7, 9)) < 0.6)
        np.testing.assert_allclose(vsm.ppmi(F).weights.toarray(), ppmi_oracle(F), atol=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(arrays(np.int64, (5, 6), elements=st.integers(0, 50)))
    def test_nonnegative_and_zero_preserving(self, F):
        if F.sum() == 0:
            return
        X = vsm.ppmi(F).weights
        assert (X.data > 0).all()
        assert np.all(X.toarray()[F == 0] == 0)


class TestSvd:
    def test_diag_dominant(self):
        f = vsm.truncated_svd(np.diag([3.0, 1.0]), 1)
        np.testing.assert_allclose(f.sigma, [3.0])
        np.testing.assert_allclose(f.reconstruct(), np.diag([3.0, 0.0]), atol=1e-12)

    def test_jacobi_oracle(self):
        rng = np.random.default_rng(11)
        A = rng.normal(size=(5, 4))
        s_ref, _, _ = jacobi_svd(A)
        f = vsm.truncated_svd(A, 4)
        np.testing.assert_allclose(f.sigma, s_ref, atol=1e-10)
        assert np.linalg.norm(f.reconstruct() - A) < 1e-8

    def test_sparse_arpack_path(self):
        rng = np.random.default_rng(2)
        X = sp.random(500, 450, density=0.02, random_state=3, format="csr")
        f = vsm.truncated_svd(X, 10, seed=rng.integers(100))
        dense = np.linalg.svd(X.toarray(), compute_uv=False)[:10]
        np.testing.assert_allclose(f.sigma, dense, rtol=1e-8)
        np.testing.assert_allclose(f.U.T @ f.U, np.eye(10), atol=1e-8)

    def test_signs_deterministic(self):
        A = np.random.default_rng(0).normal(size=(6, 5))
        f = vsm.truncated_svd(A, 3)
        pivot = np.argmax(np.abs(f.U), axis=0)
        assert (f.U[pivot, range(3)] > 0).all()

    def test_k_out_of_range(self):
        with pytest.raises(ValueError):
            vsm.truncated_svd(np.eye(3), 4)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000))
    def test_error_nonincreasing_in_k(self, seed):
        A = np.random.default_rng(seed).normal(size=(8, 6))
        full = vsm.truncated_svd(A, 6)
        errs = [np.linalg.norm(full.truncate(k).reconstruct() - A) for k in range(1, 7)]
        assert all(e1 >= e2 - 1e-12 for e1, e2 in zip(errs, errs[1:]))
        assert errs[-1] < 1e-8
        np.testing.assert_allclose(full.U.T @ full.U, np.eye(6), atol=1e-8)
        np.testing.assert_allclose(full.V.T @ full.V, np.eye(6), atol=1e-8)
        assert np.all(np.diff(full.sigma) <= 0) and np.all(full.sigma >= 0)


class TestProject:
    def _factors(self):
        return vsm.SvdFactors(np.eye(3)[:, :2], np.array([4.0, 1.0]), np.eye(2),
                              Vocabulary(["a", "b", "c"]))

    def test_p_zero_keeps_u(self):
        np.testing.assert_array_equal(vsm.project(self._factors(), 0.0).vectors, np.eye(3)[:, :2])

    def test_p_one(self):
        np.testing.assert_array_equal(vsm.project(self._factors(), 1.0).vectors[:2],
                                      np.diag([4.0, 1.0]))

    def test_sqrt_scales(self):
        e = vsm.project(self._factors(), 0.5)
        np.testing.assert_allclose(e.vectors[0], [2.0, 0.0])
        np.testing.assert_allclose(e.vectors[1], [0.0, 1.0])

    def test_warns_outside_unit_interval(self):
        with pytest.warns(UserWarning):
            vsm.project(self._factors(), 1.5)


class TestCosine:
    def _emb(self, rows):
        return vsm.Embedding("general", Vocabulary([str(i) for i in range(len(rows))]),
                             np.array(rows, dtype=float), 1.0)

    def test_hand_value(self):
        assert vsm.cosine(self._emb([[1, 0], [1, 1]]), "0", "1") == pytest.approx(1 / math.sqrt(2))

    def test_zero_vector(self):
        assert vsm.cosine(self._emb([[0, 0], [1, 1]]), "0", "1") == 0.0

    def test_orthogonal(self):
        assert vsm.cosine(self._emb([[1, 0], [0, 3]]), "0", "1") == 0.0

    @given(arrays(np.float64, (2, 4), elements=st.floats(-10, 10)))
    def test_symmetric(self, rows):
        e = self._emb(rows)
        assert vsm.cosine(e, "0", "1") == vsm.cosine(e, "1", "0")


class TestFeatureSet:
    def test_ranked_and_capped(self):
        fs = FeatureSet.from_weights("w", {"c1": 0.5, "c2": 0.9})
        assert fs.contexts == ("c2", "c1")
        assert fs.rank("c2") == 1 and fs.rank("c1") == 2 and fs.rank("zz") is None
        assert FeatureSet.from_weights("w", {"c1": 0.5, "c2": 0.9}, 1).contexts == ("c2",)

    def test_ties_by_context_key(self):
        fs = FeatureSet.from_weights("w", {"b": 1.0, "a": 1.0, "c": 2.0})
        assert fs.contexts == ("c", "a", "b")

    def test_empty(self):
        assert len(FeatureSet.from_weights("w", {})) == 0

    def test_row_features_deterministic(self):
        X = vsm.ppmi(np.array([[2, 2, 2, 0], [1, 0, 3, 5], [0, 4, 1, 1]]))
        word = X.rows.terms[0]
        assert vsm.row_features(X, word).contexts == vsm.row_features(X, word).contexts


class TestFiles:
    def test_matrix_roundtrip(self, tmp_path):
        C = vsm.count_cooccurrences(["a b c a", "c b"], Vocabulary(["a", "b", "c"]), 2)
        vsm.save_matrix(C, tmp_path / "c.mat")
        back = vsm.load_matrix(tmp_path / "c.mat")
        assert back.cols == C.cols and back.rows == C.rows
        assert (back.counts != C.counts).nnz == 0
        X = vsm.ppmi(C)
        vsm.save_matrix(X, tmp_path / "x.mat")
        Y = vsm.load_matrix(tmp_path / "x.mat")
        np.testing.assert_array_equal(Y.weights.toarray(), X.weights.toarray())
        assert (tmp_path / "x.mat").read_text().startswith("rows=3 cols=")

    def test_embedding_roundtrip(self, tmp_path):
        rng = np.random.default_rng(0)
        f = vsm.truncated_svd(rng.normal(size=(4, 3)), 2)
        e = vsm.project(f, 0.3, "domain", Vocabulary(list("wxyz")))
        vsm.save_embedding(e, tmp_path / "e.txt")
        back = vsm.load_embedding(tmp_path / "e.txt")
        np.testing.assert_array_equal(back.vectors, e.vectors)
        assert (back.k, back.p, back.space) == (2, 0.3, "domain")
