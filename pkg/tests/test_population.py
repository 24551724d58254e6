import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_spd
from mgsda.errors import (
    EmptySupport,
    IndexInSupport,
    IndexOutOfRange,
    InvalidCorrelation,
    InvalidPriors,
    NoComplement,
    NotPositiveDefinite,
    OddSupportSize,
)
from mgsda.population import (
    build_sigma,
    check_priors,
    derive,
    max_sigma_conditional,
    population_contrasts,
    scenario,
    scenario_means,
    sigma_conditional,
)


def scripted_contrasts(pi, mu):
    G = len(pi)
    cols = []
    for r in range(1, G):
        num = sum(pi[g] * (mu[g] - mu[r]) for g in range(r))
        cols.append(math.sqrt(pi[r]) * num / math.sqrt(sum(pi[:r]) * sum(pi[: r + 1])))
    return np.column_stack(cols)


class TestContrasts:
    def test_equal_means_zero(self):
        mu = np.tile(np.arange(4.0), (3, 1))
        np.testing.assert_array_equal(population_contrasts([0.2, 0.3, 0.5], mu), 0.0)

    def test_two_groups_half(self):
        v = np.array([2.0, -4.0, 1.0])
        mu = np.vstack([v, np.zeros(3)])
        np.testing.assert_allclose(population_contrasts([0.5, 0.5], mu)[:, 0], v / 2)

    def test_scenario_matches_script(self):
        mu = scenario_means(20, 6)
        pi = [1 / 3] * 3
        np.testing.assert_allclose(population_contrasts(pi, mu), scripted_contrasts(pi, mu), atol=1e-15)

    def test_scenario_values(self):
        # Delta_1 = -mu_2 / sqrt 6; Delta_2 = (mu_1 + mu_2 - 2 mu_3) / (3 sqrt 2)
        D = population_contrasts([1 / 3] * 3, scenario_means(4, 2))
        np.testing.assert_allclose(D[:, 0], [-1 / math.sqrt(6)] * 2 + [0, 0], atol=1e-15)
        np.testing.assert_allclose(D[:, 1], [-1 / (3 * math.sqrt(2)), 3 / (3 * math.sqrt(2)), 0, 0],
                                   atol=1e-15)

    @pytest.mark.parametrize("pi", [[0.5, 0.6], [1.0, 0.0], [-0.5, 1.5], [1.0]])
    def test_invalid_priors(self, pi):
        with pytest.raises(InvalidPriors):
            check_priors(pi)


class TestBuildSigma:
    @pytest.mark.parametrize("structure", ["toeplitz", "equicorrelation"])
    def test_rho_zero_identity(self, structure):
        np.testing.assert_array_equal(build_sigma(structure, 4, 0.0, 7), np.eye(7))

    def test_toeplitz_block(self):
        S = build_sigma("toeplitz", 3, 0.5, 5)
        np.testing.assert_allclose(S[:3, :3], [[1, 0.5, 0.25], [0.5, 1, 0.5], [0.25, 0.5, 1]])
        np.testing.assert_array_equal(S[:3, 3:], 0.0)
        np.testing.assert_array_equal(S[3:, 3:], np.eye(2))

    def test_equicorrelation_block(self):
        S = build_sigma("equicorrelation", 2, 0.9, 4)
        np.testing.assert_allclose(S[:2, :2], [[1, 0.9], [0.9, 1]])

    @pytest.mark.parametrize(
        "structure, s, rho",
        [("toeplitz", 3, 1.0), ("toeplitz", 3, -0.1), ("equicorrelation", 3, -0.5), ("equicorrelation", 3, 1.0)],
    )
    def test_invalid_rho(self, structure, s, rho):
        with pytest.raises(InvalidCorrelation):
            build_sigma(structure, s, rho, 5)

    def test_unknown_structure(self):
        with pytest.raises(ValueError):
            build_sigma("banded", 2, 0.1, 4)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0, 0.999), st.integers(2, 12))
    def test_toeplitz_spd(self, rho, s):
        derive([1 / 3] * 3, scenario_means(s + 2, s - s % 2), build_sigma("toeplitz", s, rho, s + 2))

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-0.99, 0.99), st.integers(2, 10))
    def test_equicorrelation_spd_on_legal_range(self, rho, s):
        if not -1 / (s - 1) + 1e-3 < rho:
            return
        np.linalg.cholesky(build_sigma("equicorrelation", s, rho, s + 1))


class TestScenarioMeans:
    def test_small(self):
        mu = scenario_means(4, 2)
        np.testing.assert_array_equal(mu, [[0, 0, 0, 0], [1, 1, 0, 0], [1, -1, 0, 0]])

    def test_no_ambient_zeros(self):
        np.testing.assert_array_equal(scenario_means(2, 2), [[0, 0], [1, 1], [1, -1]])

    def test_odd_support(self):
        with pytest.raises(OddSupportSize):
            scenario_means(10, 3)


class TestDerive:
    def test_canonical_support(self):
        spec = scenario("toeplitz", 100, 10, 0.0)
        np.testing.assert_array_equal(spec.support, np.arange(10))
        np.testing.assert_allclose(spec.psi, spec.delta)

    @pytest.mark.parametrize("structure", ["toeplitz", "equicorrelation"])
    @pytest.mark.parametrize("rho", [0.25, 0.5, 0.9])
    def test_support_is_block(self, structure, rho):
        spec = scenario(structure, 30, 10, rho)
        np.testing.assert_array_equal(spec.support, np.arange(10))
        assert spec.s == 10
        np.testing.assert_array_equal(spec.complement, np.arange(10, 30))

    def test_equal_means_empty_support(self):
        spec = derive([0.5, 0.5], np.ones((2, 5)), np.eye(5))
        assert spec.s == 0

    def test_block_sigma_support_inside_block(self, rng):
        S = np.eye(8)
        S[:4, :4] = random_spd(rng, 4)
        mu = np.zeros((3, 8))
        mu[1, :4] = rng.standard_normal(4)
        mu[2, :4] = rng.standard_normal(4)
        spec = derive([0.2, 0.3, 0.5], mu, S)
        assert set(spec.support.tolist()) <= set(range(4))

    def test_psi_residual(self, rng):
        S = random_spd(rng, 12)
        mu = rng.standard_normal((4, 12))
        spec = derive([0.1, 0.2, 0.3, 0.4], mu, S)
        assert np.abs(S @ spec.psi - spec.delta).max() <= 1e-8

    def test_not_spd(self):
        with pytest.raises(NotPositiveDefinite):
            derive([0.5, 0.5], np.zeros((2, 2)), np.array([[1.0, 2.0], [2.0, 1.0]]))


class TestSigmaConditional:
    def test_identity(self):
        spec = scenario("toeplitz", 12, 4, 0.0)
        for j in range(4, 12):
            assert sigma_conditional(spec, j) == 1.0

    def test_block(self):
        spec = scenario("toeplitz", 12, 4, 0.7)
        assert all(sigma_conditional(spec, j) == pytest.approx(1.0) for j in range(4, 12))
        assert max_sigma_conditional(spec) == pytest.approx(1.0)

    def test_dense_matches_explicit_inverse(self, rng):
        S = random_spd(rng, 6)
        mu = np.zeros((2, 6))
        mu[1, :2] = [1.0, -1.0]
        # means chosen so Psi is supported on {0, 1}: Delta = S Psi
        psi = np.zeros(6)
        psi[:2] = [1.0, 2.0]
        mu[1] = -2 * (S @ psi)
        spec = derive([0.5, 0.5], mu, S)
        np.testing.assert_array_equal(spec.support, [0, 1])
        A = [0, 1]
        inv = np.linalg.inv(S[np.ix_(A, A)])
        for j in range(2, 6):
            oracle = S[j, j] - S[j, A] @ inv @ S[A, j]
            assert sigma_conditional(spec, j) == pytest.approx(oracle, rel=1e-12)
            assert sigma_conditional(spec, j) >= 0

    def test_errors(self):
        spec = scenario("toeplitz", 12, 4, 0.0)
        with pytest.raises(IndexInSupport):
            sigma_conditional(spec, 2)
        with pytest.raises(IndexOutOfRange):
            sigma_conditional(spec, 12)
        with pytest.raises(NoComplement):
            max_sigma_conditional(scenario("toeplitz", 4, 4, 0.0))
        with pytest.raises(EmptySupport):
            sigma_conditional(derive([0.5, 0.5], np.zeros((2, 3)), np.eye(3)), 1)
