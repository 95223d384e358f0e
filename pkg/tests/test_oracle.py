import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import planted_panel
from oracles import loop_pooled_covariance
from tsbpca import Dataset, RunConfig, compress
from tsbpca.exceptions import NotOrthonormal, NotSymmetric, ZeroData
from tsbpca.oracle import (
    batch_pca,
    pooled_covariance,
    reconstruction_error,
    subspace_distance,
    top_eigenspace,
)


def random_basis(rng, d, k):
    return np.linalg.qr(rng.standard_normal((d, k)))[0]


class TestPooledCovariance:
    def test_zeros(self):
        np.testing.assert_array_equal(pooled_covariance(Dataset.from_array(np.zeros((2, 3, 4)))), 0.0)

    def test_outer_product(self):
        C = pooled_covariance(Dataset.from_array([[[1.0, 2.0]]]))
        np.testing.assert_array_equal(C, [[1.0, 2.0], [2.0, 4.0]])

    def test_matches_double_loop(self):
        v = np.random.default_rng(5).standard_normal((2, 3, 4))
        np.testing.assert_allclose(pooled_covariance(Dataset.from_array(v)), loop_pooled_covariance(v), atol=1e-14)

    def test_recovers_planted_diagonal(self):
        rng = np.random.default_rng(17)
        B, N = 50, 80
        eig = np.array([4.0, 2.0, 1.0, 0.5])
        ds = Dataset.from_array(rng.standard_normal((B, N, 4)) * np.sqrt(eig))
        sol = batch_pca(pooled_covariance(ds))
        tol = 3 / np.sqrt(B * N)
        np.testing.assert_allclose(sol.eigenvalues, eig, atol=tol * eig.max())
        np.testing.assert_allclose(np.abs(sol.eigenvectors), np.eye(4), atol=0.1)


class TestBatchPCA:
    def test_diagonal(self):
        sol = batch_pca(np.diag([1.0, 4.0]))
        np.testing.assert_allclose(sol.eigenvalues, [4.0, 1.0])
        np.testing.assert_allclose(sol.eigenvectors, [[0.0, 1.0], [1.0, 0.0]])

    def test_two_by_two(self):
        sol = batch_pca(np.array([[2.0, 1.0], [1.0, 2.0]]))
        np.testing.assert_allclose(sol.eigenvalues, [3.0, 1.0])
        s = 1 / np.sqrt(2)
        np.testing.assert_allclose(np.abs(sol.eigenvectors), [[s, s], [s, s]])
        np.testing.assert_allclose(sol.eigenvectors[:, 0], [s, s])

    def test_recomposition(self):
        A = np.random.default_rng(9).standard_normal((5, 5))
        C = A + A.T
        sol = batch_pca(C)
        V, w = sol.eigenvectors, sol.eigenvalues
        np.testing.assert_allclose(V @ np.diag(w) @ V.T, C, atol=1e-8)
        np.testing.assert_allclose(V.T @ V, np.eye(5), atol=1e-10)
        np.testing.assert_allclose(C @ V, V * w, atol=1e-8)
        assert (np.diff(w) <= 0).all()

    def test_sign_convention(self):
        A = np.random.default_rng(2).standard_normal((6, 6))
        V = batch_pca(A @ A.T).eigenvectors
        pivots = V[np.abs(V).argmax(axis=0), np.arange(6)]
        assert (pivots > 0).all()

    def test_not_symmetric(self):
        with pytest.raises(NotSymmetric):
            batch_pca(np.array([[1.0, 2.0], [0.0, 1.0]]))


class TestSubspaceDistance:
    def test_identical(self, rng):
        Q = random_basis(rng, 5, 2)
        assert subspace_distance(Q, Q) == pytest.approx(0.0, abs=1e-12)

    def test_orthogonal(self):
        assert subspace_distance(np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]])) == pytest.approx(1.0)

    def test_sign_flips_and_permutations(self, rng):
        Q = random_basis(rng, 6, 3)
        Q2 = Q[:, [2, 0, 1]] * np.array([-1.0, 1.0, -1.0])
        assert subspace_distance(Q, Q2) == pytest.approx(0.0, abs=1e-12)

    def test_rotation_within_span(self, rng):
        Q = random_basis(rng, 6, 3)
        R = random_basis(rng, 3, 3)
        assert subspace_distance(Q, Q @ R) == pytest.approx(0.0, abs=1e-12)

    def test_rejects_non_orthonormal(self):
        with pytest.raises(NotOrthonormal):
            subspace_distance(np.array([[2.0], [0.0]]), np.array([[1.0], [0.0]]))

    @settings(max_examples=50)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 7), st.data())
    def test_pseudometric(self, seed, d, data):
        k = data.draw(st.integers(1, d))
        rng = np.random.default_rng(seed)
        a, b, c = (random_basis(rng, d, k) for _ in range(3))
        ab, ba = subspace_distance(a, b), subspace_distance(b, a)
        assert ab == pytest.approx(ba, abs=1e-12)
        assert 0.0 <= ab <= 1.0
        assert subspace_distance(a, c) <= ab + subspace_distance(b, c) + 1e-9


class TestReconstructionError:
    def test_full_basis(self, small_panel):
        assert reconstruction_error(small_panel, np.eye(3)) == 0.0

    def test_data_inside_span(self, rng):
        q = random_basis(rng, 5, 2)
        ds = Dataset.from_array(rng.standard_normal((4, 6, 2)) @ q.T)
        assert reconstruction_error(ds, q) == pytest.approx(0.0, abs=1e-12)

    def test_zero_data(self):
        with pytest.raises(ZeroData):
            reconstruction_error(Dataset.from_array(np.zeros((1, 2, 3))), np.eye(3)[:, :1])

    def test_oracle_basis_is_optimal(self):
        ds, _ = planted_panel(32, 40, 6, [5, 3, 1, 0.5, 0.2, 0.1], seed=4)
        best = reconstruction_error(ds, top_eigenspace(ds, 2))
        rng = np.random.default_rng(99)
        for _ in range(100):
            assert best <= reconstruction_error(ds, random_basis(rng, 6, 2))

    @pytest.mark.parametrize("seed", range(5))
    @pytest.mark.parametrize("k", [1, 2, 4])
    def test_oracle_beats_streaming(self, seed, k):
        ds, _ = planted_panel(16, 30, 6, [5, 3, 1, 0.5, 0.2, 0.1], seed=seed)
        rep = compress(ds, RunConfig(time_batch=5, components=k, seed=seed))
        assert reconstruction_error(ds, top_eigenspace(ds, k)) <= reconstruction_error(ds, rep.final_q) + 1e-9
