import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_dataset
from mgsda.errors import DegenerateSampleSize, DimensionMismatch, EmptyGroup, IndexOutOfRange
from mgsda.sample_stats import LabeledDataset, compute_stats, restrict


def brute_force_W(X, y, G):
    n, p = X.shape
    W = np.zeros((p, p))
    for g in range(1, G + 1):
        rows = [X[i] for i in range(n) if y[i] == g]
        mean = sum(rows) / len(rows)
        for x in rows:
            for a in range(p):
                for b in range(p):
                    W[a, b] += (x[a] - mean[a]) * (x[b] - mean[b])
    return W / (n - G)


def brute_force_D(X, y, G):
    # direct transcription of the contrast formula with explicit loops
    n, p = X.shape
    counts = [sum(1 for v in y if v == g) for g in range(1, G + 1)]
    means = [sum(X[i] for i in range(n) if y[i] == g) / counts[g - 1] for g in range(1, G + 1)]
    D = np.zeros((p, G - 1))
    for r in range(1, G):
        acc = np.zeros(p)
        for g in range(1, r + 1):
            acc += counts[g - 1] * (means[g - 1] - means[r])
        left = sum(counts[:r])
        right = sum(counts[: r + 1])
        D[:, r - 1] = math.sqrt(counts[r]) * acc / (math.sqrt(n) * math.sqrt(left * right))
    return D


class TestComputeStats:
    def test_constant_groups_give_zero(self):
        X = np.ones((6, 3))
        y = np.array([1, 1, 2, 2, 3, 3])
        stats = compute_stats(LabeledDataset(X, y, 3))
        np.testing.assert_array_equal(stats.W, 0.0)
        np.testing.assert_array_equal(stats.D, 0.0)

    def test_scalar_pooled_variance(self):
        X = np.array([[0.0], [2.0], [1.0], [3.0]])
        y = np.array([1, 1, 2, 2])
        stats = compute_stats(LabeledDataset(X, y, 2))
        assert stats.W[0, 0] == pytest.approx(2.0)

    def test_two_group_contrast(self):
        X = np.array([[1.0, 5.0], [1.0, 7.0], [0.0, 5.0], [0.0, 7.0]])
        y = np.array([1, 1, 2, 2])
        stats = compute_stats(LabeledDataset(X, y, 2))
        np.testing.assert_allclose(stats.D[:, 0], [0.5, 0.0], atol=1e-15)

    @pytest.mark.parametrize("G", [2, 3, 5])
    def test_matches_brute_force(self, rng, G):
        data = random_dataset(rng, 25, 4, G)
        stats = compute_stats(data)
        np.testing.assert_allclose(stats.W, brute_force_W(data.X, data.y, G), atol=1e-12)
        np.testing.assert_allclose(stats.D, brute_force_D(data.X, data.y, G), atol=1e-12)
        assert stats.D.shape == (4, G - 1)
        assert (stats.n, stats.p, stats.G) == (25, 4, G)

    def test_two_group_identity(self, rng):
        data = random_dataset(rng, 30, 5, 2)
        stats = compute_stats(data)
        n1, n2 = stats.counts
        expected = math.sqrt(n1 * n2) / stats.n * (stats.means[0] - stats.means[1])
        np.testing.assert_allclose(stats.D[:, 0], expected, rtol=1e-12)

    def test_psd_and_symmetric(self, rng):
        stats = compute_stats(random_dataset(rng, 12, 20, 3))
        np.testing.assert_array_equal(stats.W, stats.W.T)
        assert np.linalg.eigvalsh(stats.W).min() >= -1e-8 * np.trace(stats.W)

    def test_rebuild(self, rng):
        stats = compute_stats(random_dataset(rng, 40, 6, 4))
        np.testing.assert_allclose(stats.rebuild_contrasts(), stats.D, rtol=1e-14, atol=1e-15)

    def test_singleton_group_warns_and_contributes_nothing(self):
        X = np.array([[0.0], [2.0], [100.0], [5.0], [7.0]])
        y = np.array([1, 1, 2, 3, 3])
        stats = compute_stats(LabeledDataset(X, y, 3))
        assert stats.W[0, 0] == pytest.approx((2.0 + 2.0) / 2)
        assert stats.warnings

    def test_empty_group(self):
        with pytest.raises(EmptyGroup):
            compute_stats(LabeledDataset(np.zeros((4, 2)), np.array([1, 1, 3, 3]), 3))

    def test_degenerate_sample_size(self):
        with pytest.raises(DegenerateSampleSize):
            compute_stats(LabeledDataset(np.zeros((3, 2)), np.array([1, 2, 3]), 3))

    def test_label_validation(self):
        with pytest.raises(IndexOutOfRange):
            LabeledDataset(np.zeros((3, 2)), np.array([1, 2, 4]), 3)
        with pytest.raises(DimensionMismatch):
            LabeledDataset(np.zeros((3, 2)), np.array([1, 2]), 3)


class TestInvariances:
    def test_observation_permutation(self, rng):
        data = random_dataset(rng, 30, 4, 3)
        perm = rng.permutation(30)
        a = compute_stats(data)
        b = compute_stats(LabeledDataset(data.X[perm], data.y[perm], 3))
        np.testing.assert_allclose(b.W, a.W, rtol=1e-13, atol=1e-14)
        np.testing.assert_allclose(b.D, a.D, rtol=1e-13, atol=1e-14)

    def test_feature_permutation(self, rng):
        data = random_dataset(rng, 30, 5, 3)
        sigma = rng.permutation(5)
        a = compute_stats(data)
        b = compute_stats(LabeledDataset(data.X[:, sigma], data.y, 3))
        np.testing.assert_array_equal(b.W, a.W[np.ix_(sigma, sigma)])
        np.testing.assert_array_equal(b.D, a.D[sigma])


class TestRestrict:
    def test_full_set_is_identity(self, rng):
        stats = compute_stats(random_dataset(rng, 20, 4, 3))
        W, D = restrict(stats, range(4))
        np.testing.assert_array_equal(W, stats.W)
        np.testing.assert_array_equal(D, stats.D)

    def test_singleton(self, rng):
        stats = compute_stats(random_dataset(rng, 20, 4, 3))
        W, D = restrict(stats, [2])
        assert W.shape == (1, 1) and W[0, 0] == stats.W[2, 2]
        np.testing.assert_array_equal(D[0], stats.D[2])

    def test_brute_force_gather(self, rng):
        stats = compute_stats(random_dataset(rng, 20, 8, 3))
        A = [5, 1, 6]
        W, D = restrict(stats, A)
        for i, a in enumerate(A):
            np.testing.assert_array_equal(D[i], stats.D[a])
            for j, b in enumerate(A):
                assert W[i, j] == stats.W[a, b]

    @pytest.mark.parametrize("A", [[-1], [8], [0, 9]])
    def test_out_of_range(self, rng, A):
        stats = compute_stats(random_dataset(rng, 20, 8, 3))
        with pytest.raises(IndexOutOfRange):
            restrict(stats, A)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.integers(1, 6))
def test_w_psd_property(seed, G, p):
    data = random_dataset(np.random.default_rng(seed), G + 3 + p, p, G)
    W = compute_stats(data).W
    assert np.linalg.eigvalsh(W).min() >= -1e-8 * max(np.trace(W), 1e-300)
