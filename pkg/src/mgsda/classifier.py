"""Plug-in discriminant rule on the span of the estimated directions."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonFiniteInput
from .numerics import as_matrix

PINV_RCOND = 1e-10


@dataclass(frozen=True)
class ClassifierModel:
    V: np.ndarray
    means: np.ndarray  # G x p
    counts: np.ndarray
    gram: np.ndarray  # V^T W V
    gram_pinv: np.ndarray

    @property
    def G(self) -> int:
        return self.means.shape[0]

    @property
    def p(self) -> int:
        return self.V.shape[0]

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def log_priors(self) -> np.ndarray:
        return np.log(self.counts / self.counts.sum())


def build_model(stats, V) -> ClassifierModel:
    """Cache ``K = V^T W V`` and its pseudo-inverse (relative cutoff 1e-10).

    An all-zero ``V`` is accepted with a warning; every score then reduces to
    the prior term.
    """
    V = as_matrix(V, "V")
    if V.shape[0] != stats.p:
        raise DimensionMismatch(f"V has {V.shape[0]} rows, data has {stats.p} features")
    if not V.any():
        warnings.warn("all-zero coefficient matrix: classification uses priors only", stacklevel=2)
    return model_from_parts(V, stats.means, stats.counts, V.T @ stats.W @ V)


def model_from_parts(V, means, counts, gram) -> ClassifierModel:
    """Assemble a model from stored pieces (used when loading a model file)."""
    V = as_matrix(V, "V")
    K = as_matrix(gram, "gram")
    if K.shape != (V.shape[1], V.shape[1]):
        raise DimensionMismatch(f"gram is {K.shape}, expected {(V.shape[1],) * 2}")
    K = 0.5 * (K + K.T)
    K_pinv = np.linalg.pinv(K, rcond=PINV_RCOND, hermitian=True) if K.any() else np.zeros_like(K)
    return ClassifierModel(
        V=V,
        means=np.asarray(means, dtype=float),
        counts=np.asarray(counts),
        gram=K,
        gram_pinv=K_pinv,
    )


def scores(model: ClassifierModel, X) -> np.ndarray:
    """``(x - mean_g)^T V K^+ V^T (x - mean_g) - 2 log(n_g / n)`` for every row and group."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.p:
        raise DimensionMismatch(f"expected {model.p} features, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise NonFiniteInput("observation contains NaN or Inf")
    proj = X @ model.V  # m x k
    centers = model.means @ model.V  # G x k
    out = np.empty((X.shape[0], model.G))
    for g in range(model.G):
        diff = proj - centers[g]
        out[:, g] = np.einsum("ij,jk,ik->i", diff, model.gram_pinv, diff) - 2.0 * model.log_priors[g]
    return out


def classify(model: ClassifierModel, x) -> tuple[int, np.ndarray]:
    """Label in ``1..G`` and the score vector; ties go to the smallest label."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatch("classify takes a single observation")
    sc = scores(model, x)[0]
    return int(np.argmin(sc)) + 1, sc


def classify_batch(model: ClassifierModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        return np.zeros(0, dtype=np.int64)
    # argmin returns the first minimum, which is the smallest-label tie-break
    return np.argmin(scores(model, X), axis=1) + 1
