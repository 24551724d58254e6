import numpy as np
import pytest

from mgsda.sample_stats import LabeledDataset, compute_stats


def random_spd(rng, p, cond_floor=0.1):
    A = rng.standard_normal((p, p))
    return A @ A.T / p + cond_floor * np.eye(p)


def random_dataset(rng, n, p, G, shift=1.0):
    y = np.concatenate([np.arange(1, G + 1), rng.integers(1, G + 1, size=n - G)])
    mu = shift * rng.standard_normal((G, p))
    X = mu[y - 1] + rng.standard_normal((n, p))
    return LabeledDataset(X, y, G)


def random_stats(rng, n, p, G, shift=1.0):
    return compute_stats(random_dataset(rng, n, p, G, shift))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
