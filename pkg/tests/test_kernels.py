import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kerneldr.errors import AlreadyCentered, DimensionMismatch
from kerneldr.kernels import (
    GramMatrix,
    KernelSpec,
    center_cross,
    center_gram,
    cross_gram,
    from_paper_sign,
    gram,
    kernel_eval,
)
from oracles import centering, rbf_entry

RBF1 = KernelSpec("rbf", 1.0)
LIN = KernelSpec("linear")


class TestKernelEval:
    @pytest.mark.parametrize("delta", [-2.0, 0.0, 0.1, 7.0])
    def test_self_is_one(self, delta):
        assert kernel_eval(KernelSpec("rbf", delta), [0.3, -1.2], [0.3, -1.2]) == 1.0

    def test_direct_formula(self):
        assert kernel_eval(RBF1, [0.0], [1.0]) == pytest.approx(np.exp(-1.0))

    def test_linear_dot(self):
        assert kernel_eval(LIN, [1, 2], [3, 4]) == 11.0

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatch):
            kernel_eval(RBF1, [1, 2], [1, 2, 3])

    def test_paper_sign(self):
        assert from_paper_sign(-0.1) == 0.1
        assert KernelSpec("rbf", from_paper_sign(1.0)).delta == -1.0

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            KernelSpec("poly")


class TestGram:
    def test_single_row(self):
        assert gram(RBF1, np.array([[2.0, 3.0]])).entries == pytest.approx(np.array([[1.0]]))

    def test_two_points(self):
        K = gram(RBF1, np.array([[0.0], [1.0]])).entries
        e = np.exp(-1.0)
        assert K == pytest.approx(np.array([[1.0, e], [e, 1.0]]))

    def test_linear_is_xxt(self):
        X = np.random.default_rng(0).normal(size=(4, 2))
        assert np.max(np.abs(gram(LIN, X).entries - X @ X.T)) <= 1e-12

    def test_rbf_per_entry_oracle(self):
        X = np.random.default_rng(1).normal(size=(5, 3))
        K = gram(KernelSpec("rbf", 0.7), X).entries
        ref = np.array([[rbf_entry(0.7, a, b) for b in X] for a in X])
        assert np.max(np.abs(K - ref)) <= 1e-12
        assert not gram(RBF1, X).centered

    @pytest.mark.parametrize("tile", [1, 3, 7, 256])
    def test_tile_independent_bits(self, tile):
        X = np.random.default_rng(2).normal(size=(17, 4))
        ref = gram(RBF1, X, tile=256).entries
        assert np.array_equal(gram(RBF1, X, tile=tile).entries, ref)

    def test_workers_bit_identical(self):
        X = np.random.default_rng(3).normal(size=(40, 3))
        assert np.array_equal(gram(RBF1, X, tile=5, workers=4).entries, gram(RBF1, X).entries)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(2, 25), st.floats(0.01, 10.0), st.integers(0, 10_000))
    def test_rbf_psd(self, n, delta, seed):
        X = np.random.default_rng(seed).normal(size=(n, 2))
        K = gram(KernelSpec("rbf", delta), X).entries
        assert np.linalg.eigvalsh(K).min() >= -1e-8 * n
        assert np.all(np.diag(K) == 1.0)


class TestCrossGram:
    def test_self_cross(self):
        X = np.random.default_rng(4).normal(size=(6, 2))
        assert cross_gram(RBF1, X, X) == pytest.approx(gram(RBF1, X).entries)

    def test_training_point_column(self):
        X = np.random.default_rng(5).normal(size=(4, 2))
        Kx = cross_gram(RBF1, X, X[2:3])
        assert Kx[0, 2] == 1.0

    def test_per_entry_oracle(self):
        rng = np.random.default_rng(6)
        Xtr, Xte = rng.normal(size=(4, 2)), rng.normal(size=(3, 2))
        Kx = cross_gram(KernelSpec("rbf", 0.3), Xtr, Xte)
        assert Kx.shape == (3, 4)
        ref = np.array([[rbf_entry(0.3, a, b) for b in Xtr] for a in Xte])
        assert np.max(np.abs(Kx - ref)) <= 1e-12

    def test_column_mismatch(self):
        with pytest.raises(DimensionMismatch):
            cross_gram(RBF1, np.zeros((3, 2)), np.zeros((1, 3)))


class TestCentering:
    def test_constant_annihilated(self):
        C = center_gram(GramMatrix(np.ones((4, 4))))
        assert C.centered
        assert C.entries == pytest.approx(np.zeros((4, 4)))

    def test_identity_two(self):
        C = center_gram(np.eye(2)).entries
        assert C == pytest.approx(np.array([[0.5, -0.5], [-0.5, 0.5]]))

    def test_triple_product_oracle(self):
        K = np.random.default_rng(7).normal(size=(5, 5))
        K = (K + K.T) / 2
        H = centering(5)
        assert np.max(np.abs(center_gram(K).entries - H @ K @ H)) <= 1e-12

    def test_row_sums_vanish(self):
        X = np.random.default_rng(8).normal(size=(12, 3))
        C = center_gram(gram(RBF1, X)).entries
        tol = 1e-8 * 12 * np.abs(C).max()
        assert np.abs(C.sum(axis=0)).max() <= tol
        assert np.abs(C.sum(axis=1)).max() <= tol

    def test_already_centered(self):
        C = center_gram(gram(RBF1, np.eye(3)))
        with pytest.raises(AlreadyCentered):
            center_gram(C)

    def test_forced_recentering_is_noop(self):
        C = center_gram(gram(RBF1, np.random.default_rng(9).normal(size=(8, 2))))
        assert np.abs(center_gram(C, force=True).entries - C.entries).max() <= 1e-10


class TestCenterCross:
    def test_training_row_matches_centered_gram(self):
        X = np.random.default_rng(10).normal(size=(7, 2))
        K = gram(RBF1, X)
        Kc = center_cross(K, K.entries[3:4])
        assert Kc[0] == pytest.approx(center_gram(K).entries[3], abs=1e-12)

    def test_constants(self):
        assert center_cross(np.ones((4, 4)), np.ones((2, 4))) == pytest.approx(np.zeros((2, 4)))

    def test_linear_feature_space_oracle(self):
        # with phi = identity, centering in feature space is subtracting the training mean
        rng = np.random.default_rng(11)
        Xtr, Xte = rng.normal(size=(6, 3)), rng.normal(size=(4, 3))
        mu = Xtr.mean(axis=0)
        ref = (Xte - mu) @ (Xtr - mu).T
        got = center_cross(gram(LIN, Xtr), cross_gram(LIN, Xtr, Xte))
        assert np.max(np.abs(got - ref)) <= 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            center_cross(np.eye(3), np.zeros((2, 4)))
