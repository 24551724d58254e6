"""Group summaries, pooled within-group scatter ``W`` and mean contrasts ``D``.

Labels are the integers ``1..G``; feature indices in the library are 0-based.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSampleSize, DimensionMismatch, EmptyGroup, IndexOutOfRange
from .numerics import as_matrix


@dataclass(frozen=True)
class LabeledDataset:
    X: np.ndarray
    y: np.ndarray
    G: int

    def __post_init__(self):
        X = as_matrix(self.X, "X")
        y = np.asarray(self.y)
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DimensionMismatch(f"{X.shape[0]} observations but {y.shape} labels")
        if y.size and not np.issubdtype(y.dtype, np.integer):
            if not np.all(y == np.round(y)):
                raise ValueError("labels must be integers 1..G")
            y = y.astype(np.int64)
        y = y.astype(np.int64)
        if self.G < 2:
            raise ValueError("need at least two groups")
        if y.size and (y.min() < 1 or y.max() > self.G):
            raise IndexOutOfRange(f"labels must lie in 1..{self.G}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def counts(self) -> np.ndarray:
        return np.bincount(self.y - 1, minlength=self.G)[: self.G]


def contrast_matrix(weights, means) -> np.ndarray:
    """Weighted mean contrasts, one column per ``r = 1..G-1``.

    Column ``r`` is ``sqrt(w_{r+1}) * sum_{g<=r} w_g (m_g - m_{r+1})``
    divided by ``sqrt(W_r * W_{r+1})`` with ``W_r`` the cumulative weight.
    With priors as weights this is the population contrast matrix; with group
    counts it is ``sqrt(n)`` times the sample one.
    """
    w = np.asarray(weights, dtype=float)
    M = np.asarray(means, dtype=float)
    G, p = M.shape
    if w.shape != (G,):
        raise DimensionMismatch(f"{w.shape[0]} weights for {G} means")
    cum = np.cumsum(w)
    C = np.empty((p, G - 1))
    acc = np.zeros(p)  # sum_{g<=r} w_g m_g
    for r in range(1, G):
        acc += w[r - 1] * M[r - 1]
        num = acc - cum[r - 1] * M[r]
        C[:, r - 1] = np.sqrt(w[r]) * num / np.sqrt(cum[r - 1] * cum[r])
    return C


@dataclass(frozen=True)
class SampleStatistics:
    counts: np.ndarray
    means: np.ndarray  # G x p
    W: np.ndarray
    D: np.ndarray
    warnings: tuple[str, ...] = field(default=())

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def p(self) -> int:
        return self.W.shape[0]

    @property
    def G(self) -> int:
        return self.counts.shape[0]

    def rebuild_contrasts(self) -> np.ndarray:
        return contrast_matrix(self.counts, self.means) / np.sqrt(self.n)


def compute_stats(data: LabeledDataset) -> SampleStatistics:
    """Pooled within-group covariance and sample mean contrasts.

    Raises
    ------
    EmptyGroup
        Some label in ``1..G`` has no observations.
    DegenerateSampleSize
        ``n <= G``, so the pooled divisor ``n - G`` is not positive.
    """
    G, n, p = data.G, data.n, data.p
    counts = data.counts()
    empty = [g + 1 for g in range(G) if counts[g] == 0]
    if empty:
        raise EmptyGroup(f"groups with no observations: {empty}")
    if n <= G:
        raise DegenerateSampleSize(f"n = {n} must exceed G = {G}")

    means = np.empty((G, p))
    scatter = np.zeros((p, p))
    # fixed group order keeps the reduction bit-stable
    for g in range(G):
        Xg = data.X[data.y == g + 1]
        means[g] = Xg.mean(axis=0)
        R = Xg - means[g]
        scatter += R.T @ R
    W = scatter / (n - G)
    W = 0.5 * (W + W.T)
    D = contrast_matrix(counts, means) / np.sqrt(n)

    notes = []
    singletons = [g + 1 for g in range(G) if counts[g] == 1]
    if singletons:
        notes.append(f"groups {singletons} have a single observation and add nothing to W")
    return SampleStatistics(counts=counts, means=means, W=W, D=D, warnings=tuple(notes))


def _check_index_set(A, p: int) -> np.ndarray:
    idx = np.asarray(A, dtype=np.int64).ravel()
    if idx.size == 0:
        raise ValueError("index set must be nonempty")
    if idx.min() < 0 or idx.max() >= p:
        raise IndexOutOfRange(f"indices must lie in 0..{p - 1}")
    return idx


def restrict(stats: SampleStatistics, A) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(W[A, A], D[A])`` in the order given by ``A``."""
    idx = _check_index_set(A, stats.p)
    return stats.W[np.ix_(idx, idx)], stats.D[idx]
