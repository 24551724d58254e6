"""Gaussian population model: priors, group means and a shared covariance.

Also holds the simulation scenario builders (block Toeplitz / equicorrelation
covariance and the three-group mean layout).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptySupport,
    IndexInSupport,
    IndexOutOfRange,
    InvalidCorrelation,
    InvalidPriors,
    NoComplement,
    OddSupportSize,
)
from .numerics import SpdFactor, as_matrix, row_norms, spd_factor, spd_solve
from .sample_stats import contrast_matrix

SUPPORT_TOL = 1e-10
STRUCTURES = ("toeplitz", "equicorrelation")


def check_priors(priors, G: int | None = None) -> np.ndarray:
    pi = np.asarray(priors, dtype=float).ravel()
    if G is not None and pi.shape[0] != G:
        raise InvalidPriors(f"expected {G} priors, got {pi.shape[0]}")
    if pi.shape[0] < 2 or np.any(~np.isfinite(pi)) or np.any(pi <= 0):
        raise InvalidPriors("priors must be positive and at least two")
    if abs(pi.sum() - 1.0) > 1e-12:
        raise InvalidPriors(f"priors sum to {pi.sum():.15g}, not 1")
    return pi


def population_contrasts(priors, means) -> np.ndarray:
    """Population contrast matrix (p x (G-1)) from priors and group means."""
    M = np.asarray(means, dtype=float)
    if M.ndim != 2:
        raise DimensionMismatch("means must be a G x p array")
    pi = check_priors(priors, M.shape[0])
    return contrast_matrix(pi, M)


def build_sigma(structure: str, s: int, rho: float, p: int) -> np.ndarray:
    """Block-diagonal covariance: an ``s x s`` correlated block then identity.

    ``toeplitz`` uses ``rho**|a-b|`` (needs ``0 <= rho < 1``);
    ``equicorrelation`` puts ``rho`` off the diagonal (needs
    ``-1/(s-1) < rho < 1``).
    """
    if structure not in STRUCTURES:
        raise ValueError(f"unknown structure {structure!r}; expected one of {STRUCTURES}")
    if not 0 <= s <= p:
        raise ValueError(f"need 0 <= s <= p, got s={s}, p={p}")
    rho = float(rho)
    if structure == "toeplitz":
        if not 0.0 <= rho < 1.0:
            raise InvalidCorrelation(f"Toeplitz rho must lie in [0, 1), got {rho}")
        idx = np.arange(s)
        block = rho ** np.abs(idx[:, None] - idx[None, :]).astype(float)
    else:
        lower = -1.0 / (s - 1) if s > 1 else -np.inf
        if not lower < rho < 1.0:
            raise InvalidCorrelation(f"equicorrelation rho must lie in ({lower:.4g}, 1), got {rho}")
        block = np.full((s, s), rho)
        np.fill_diagonal(block, 1.0)
    sigma = np.eye(p)
    sigma[:s, :s] = block
    return sigma


def scenario_means(p: int, s: int) -> np.ndarray:
    """Three group means: zero, ``s`` ones, and ``s/2`` ones then ``s/2`` minus ones."""
    if s % 2:
        raise OddSupportSize(f"s must be even, got {s}")
    if not 0 <= s <= p:
        raise ValueError(f"need 0 <= s <= p, got s={s}, p={p}")
    mu = np.zeros((3, p))
    mu[1, :s] = 1.0
    mu[2, : s // 2] = 1.0
    mu[2, s // 2 : s] = -1.0
    return mu


@dataclass(frozen=True)
class PopulationSpec:
    priors: np.ndarray
    means: np.ndarray  # G x p
    sigma: np.ndarray
    factor: SpdFactor
    delta: np.ndarray
    psi: np.ndarray
    support: np.ndarray  # sorted 0-based indices

    @property
    def G(self) -> int:
        return self.means.shape[0]

    @property
    def p(self) -> int:
        return self.sigma.shape[0]

    @property
    def s(self) -> int:
        return int(self.support.size)

    @property
    def complement(self) -> np.ndarray:
        mask = np.ones(self.p, dtype=bool)
        mask[self.support] = False
        return np.flatnonzero(mask)

    def sigma_aa(self) -> np.ndarray:
        A = self.support
        return self.sigma[np.ix_(A, A)]

    def delta_a(self) -> np.ndarray:
        return self.delta[self.support]


def derive(priors, means, sigma) -> PopulationSpec:
    """Build a :class:`PopulationSpec`: contrasts, ``Psi = Sigma^{-1} Delta`` and its support.

    A row of ``Psi`` belongs to the support when its l2 norm exceeds
    ``SUPPORT_TOL`` times the largest row norm.
    """
    M = np.asarray(means, dtype=float)
    S = as_matrix(sigma, "sigma")
    if S.shape != (M.shape[1], M.shape[1]):
        raise DimensionMismatch(f"sigma is {S.shape} but means have {M.shape[1]} features")
    pi = check_priors(priors, M.shape[0])
    F = spd_factor(S)
    delta = contrast_matrix(pi, M)
    psi = spd_solve(F, delta)
    norms = row_norms(psi)
    top = norms.max() if norms.size else 0.0
    support = np.flatnonzero(norms > SUPPORT_TOL * top) if top > 0 else np.zeros(0, dtype=np.int64)
    return PopulationSpec(
        priors=pi, means=M, sigma=0.5 * (S + S.T), factor=F, delta=delta, psi=psi, support=support
    )


def scenario(structure: str, p: int, s: int, rho: float, priors=None) -> PopulationSpec:
    """The three-group simulation population (uniform priors unless given)."""
    means = scenario_means(p, s)
    pi = np.full(3, 1.0 / 3.0) if priors is None else priors
    return derive(pi, means, build_sigma(structure, s, rho, p))


def sigma_conditional(spec: PopulationSpec, j: int) -> float:
    """Conditional variance ``Sigma_jj - Sigma_jA Sigma_AA^{-1} Sigma_Aj`` for ``j`` outside A."""
    A = spec.support
    if A.size == 0:
        raise EmptySupport("support is empty")
    if not 0 <= j < spec.p:
        raise IndexOutOfRange(f"index {j} outside 0..{spec.p - 1}")
    if j in set(A.tolist()):
        raise IndexInSupport(f"index {j} lies in the support")
    F = spd_factor(spec.sigma_aa())
    cross = spec.sigma[A, j]
    return float(spec.sigma[j, j] - cross @ spd_solve(F, cross))


def max_sigma_conditional(spec: PopulationSpec) -> float:
    """Largest conditional variance over the complement of the support."""
    A, Ac = spec.support, spec.complement
    if A.size == 0:
        raise EmptySupport("support is empty")
    if Ac.size == 0:
        raise NoComplement("complement of the support is empty")
    F = spd_factor(spec.sigma_aa())
    cross = spec.sigma[np.ix_(A, Ac)]
    reduction = np.einsum("ij,ij->j", cross, spd_solve(F, cross))
    return float(np.max(np.diag(spec.sigma)[Ac] - reduction))
