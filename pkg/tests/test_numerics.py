import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_spd
from mgsda.errors import DimensionMismatch, NonFiniteInput, NotPositiveDefinite
from mgsda.numerics import (
    as_matrix,
    norm_inf_2,
    norm_inf_rowsum,
    row_norms,
    spd_factor,
    spd_inverse,
    spd_solve,
    spectral_norm,
    symmetrize,
)


class TestSpdFactor:
    def test_identity(self):
        F = spd_factor(np.eye(3))
        np.testing.assert_array_equal(F.L, np.eye(3))
        assert F.dimension == 3

    def test_hand_cholesky(self):
        F = spd_factor(np.array([[4.0, 2.0], [2.0, 3.0]]))
        np.testing.assert_allclose(F.L, [[2.0, 0.0], [1.0, np.sqrt(2.0)]], rtol=1e-14)
        np.testing.assert_allclose(F.reconstruct(), [[4.0, 2.0], [2.0, 3.0]], rtol=1e-14)

    def test_indefinite(self):
        with pytest.raises(NotPositiveDefinite):
            spd_factor(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_semidefinite_rejected(self):
        with pytest.raises(NotPositiveDefinite):
            spd_factor(np.array([[1.0, 1.0], [1.0, 1.0]]))

    def test_asymmetry_beyond_tolerance(self):
        with pytest.raises(DimensionMismatch):
            spd_factor(np.array([[2.0, 1.0], [0.9, 2.0]]))

    def test_tiny_asymmetry_is_symmetrized(self):
        M = np.array([[2.0, 1.0], [1.0 + 1e-13, 2.0]])
        np.testing.assert_array_equal(symmetrize(M), symmetrize(M).T)
        spd_factor(M)

    @pytest.mark.parametrize("p", [1, 5, 40])
    def test_reconstruction(self, rng, p):
        M = random_spd(rng, p)
        F = spd_factor(M)
        assert np.all(np.diag(F.L) > 0)
        np.testing.assert_allclose(F.reconstruct(), M, rtol=1e-10, atol=1e-10 * np.abs(M).max())

    def test_non_finite(self):
        with pytest.raises(NonFiniteInput):
            spd_factor(np.array([[1.0, np.nan], [np.nan, 1.0]]))

    def test_non_square(self):
        with pytest.raises(DimensionMismatch):
            spd_factor(np.ones((2, 3)))


class TestSpdSolve:
    def test_identity(self, rng):
        B = rng.standard_normal((4, 2))
        np.testing.assert_allclose(spd_solve(spd_factor(np.eye(4)), B), B)

    def test_diagonal(self):
        X = spd_solve(spd_factor(np.diag([2.0, 4.0])), np.array([[2.0], [4.0]]))
        np.testing.assert_allclose(X, [[1.0], [1.0]])

    def test_vector_rhs_keeps_shape(self):
        x = spd_solve(spd_factor(np.diag([2.0, 4.0])), np.array([2.0, 4.0]))
        assert x.shape == (2,)

    def test_residual(self, rng):
        M = random_spd(rng, 10)
        B = rng.standard_normal((10, 3))
        X = spd_solve(spd_factor(M), B)
        assert np.abs(M @ X - B).max() <= 1e-8 * (1 + np.abs(B).max())

    @pytest.mark.parametrize("p", [3, 50, 300])
    def test_recovers_x(self, rng, p):
        M = random_spd(rng, p)
        X = rng.standard_normal((p, 2))
        got = spd_solve(spd_factor(M), M @ X)
        assert np.abs(got - X).max() / np.abs(X).max() <= 1e-8

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            spd_solve(spd_factor(np.eye(3)), np.ones((2, 1)))

    def test_inverse(self, rng):
        M = random_spd(rng, 6)
        np.testing.assert_allclose(spd_inverse(spd_factor(M)) @ M, np.eye(6), atol=1e-10)


class TestSpectralNorm:
    @pytest.mark.parametrize(
        "M, expected",
        [
            (np.diag([3.0, 1.0]), 3.0),
            (np.zeros((3, 3)), 0.0),
            (np.array([[0.0, 2.0], [0.0, 0.0]]), 2.0),
            (np.array([[1.0, -1.0]]), np.sqrt(2.0)),
        ],
    )
    def test_small_cases(self, M, expected):
        assert spectral_norm(M) == pytest.approx(expected, rel=1e-6, abs=1e-12)

    def test_start_vector_orthogonal_to_top_direction(self):
        # the all-ones start has no component along (1, -1)
        M = np.array([[1.0, -1.0], [-1.0, 1.0]]) + np.diag([0.0, 0.0])
        assert spectral_norm(M) == pytest.approx(2.0, rel=1e-6)

    @pytest.mark.parametrize("s", [4, 10, 11])
    def test_top_vector_orthogonal_to_ones(self, s):
        # the inverse Toeplitz block has an alternating leading eigenvector
        idx = np.arange(s)
        T = 0.5 ** np.abs(idx[:, None] - idx[None, :]).astype(float)
        Tinv = np.linalg.inv(T)
        assert spectral_norm(Tinv) == pytest.approx(np.linalg.eigvalsh(Tinv).max(), rel=1e-10)

    def test_against_eigendecomposition(self, rng):
        for _ in range(20):
            M = rng.standard_normal((8, 8))
            oracle = np.sqrt(np.linalg.eigvalsh(M.T @ M).max())
            assert spectral_norm(M) == pytest.approx(oracle, rel=1e-5)

    def test_rectangular(self, rng):
        M = rng.standard_normal((7, 3))
        assert spectral_norm(M) == pytest.approx(np.linalg.svd(M, compute_uv=False)[0], rel=1e-6)


class TestInfNorms:
    def test_example(self):
        M = np.array([[1.0, -2.0], [0.0, 1.0]])
        assert norm_inf_rowsum(M) == 3.0
        assert norm_inf_2(M) == pytest.approx(np.sqrt(5.0))

    @pytest.mark.parametrize("fn", [norm_inf_rowsum, norm_inf_2])
    def test_identity_and_zero(self, fn):
        assert fn(np.eye(4)) == 1.0
        assert fn(np.zeros((2, 3))) == 0.0

    def test_row_norms(self):
        np.testing.assert_allclose(row_norms(np.array([[3.0, 4.0], [0.0, 0.0]])), [5.0, 0.0])


def test_as_matrix_vector_becomes_column():
    assert as_matrix(np.arange(3.0)).shape == (3, 1)


def test_as_matrix_rejects_inf():
    with pytest.raises(NonFiniteInput):
        as_matrix(np.array([[np.inf]]))


finite = st.floats(-100, 100, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.lists(finite, min_size=3, max_size=3), min_size=3, max_size=3),
    st.floats(-50, 50, allow_nan=False),
)
def test_norms_absolutely_homogeneous(rows, c):
    M = np.array(rows)
    for fn in (norm_inf_rowsum, norm_inf_2):
        assert fn(c * M) == pytest.approx(abs(c) * fn(M), rel=1e-12, abs=1e-9)
    assert spectral_norm(c * M) == pytest.approx(abs(c) * spectral_norm(M), rel=1e-6, abs=1e-9)
