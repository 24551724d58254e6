"""Dense linear-algebra helpers used throughout the package.

Matrices are plain 2-D ``float64`` numpy arrays. Everything that needs an
inverse applied to something goes through :func:`spd_factor` /
:func:`spd_solve`; explicit inverses are only formed by :func:`spd_inverse`
where a stored inverse is actually needed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from .errors import DimensionMismatch, NonFiniteInput, NotPositiveDefinite

EPS = np.finfo(float).eps
SYMMETRY_TOL = 1e-10
POWER_MAX_ITER = 10_000


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Return ``M`` as a finite 2-D float array (vectors become columns)."""
    A = np.array(M, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFiniteInput(f"{name} contains NaN or Inf")
    return A


@dataclass(frozen=True)
class SpdFactor:
    """Lower Cholesky factor ``L`` with ``M = L @ L.T``."""

    L: np.ndarray

    @property
    def dimension(self) -> int:
        return self.L.shape[0]

    def reconstruct(self) -> np.ndarray:
        return self.L @ self.L.T


def symmetrize(M: np.ndarray) -> np.ndarray:
    """Average ``M`` with its transpose, refusing anything beyond rounding drift."""
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got {M.shape}")
    scale = np.max(np.abs(M)) if M.size else 0.0
    asym = np.max(np.abs(M - M.T)) if M.size else 0.0
    if asym > SYMMETRY_TOL * scale:
        raise DimensionMismatch(f"matrix is not symmetric (max asymmetry {asym:.3g})")
    return 0.5 * (M + M.T)


def spd_factor(M) -> SpdFactor:
    """Cholesky-factor a symmetric positive definite matrix.

    Raises
    ------
    NotPositiveDefinite
        If any pivot is at or below ``dim * eps * max(diag)``.
    """
    S = symmetrize(M)
    n = S.shape[0]
    if n == 0:
        return SpdFactor(np.zeros((0, 0)))
    max_diag = float(np.max(np.diag(S)))
    if max_diag <= 0:
        raise NotPositiveDefinite("non-positive diagonal")
    floor = n * EPS * max_diag
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    pivots = np.diag(L) ** 2
    if np.any(pivots <= floor):
        k = int(np.argmin(pivots))
        raise NotPositiveDefinite(f"pivot {k} = {pivots[k]:.3g} below {floor:.3g}")
    return SpdFactor(L)


def spd_solve(F: SpdFactor, B) -> np.ndarray:
    """Solve ``(L L^T) X = B``. ``B`` may be a vector or a matrix."""
    B = np.asarray(B, dtype=float)
    if B.shape[0] != F.dimension:
        raise DimensionMismatch(f"factor has dimension {F.dimension}, rhs has {B.shape[0]} rows")
    if F.dimension == 0:
        return np.zeros_like(B)
    return cho_solve((F.L, True), B)


def spd_inverse(F: SpdFactor) -> np.ndarray:
    X = spd_solve(F, np.eye(F.dimension))
    return 0.5 * (X + X.T)


def spectral_norm(M) -> float:
    """Largest singular value by power iteration on ``M^T M``.

    Starts from the normalised all-ones vector. That start is exactly
    orthogonal to the top singular vector of some structured matrices (for
    instance the inverse of a symmetric Toeplitz block, whose leading
    eigenvector alternates in sign), so the estimate is then verified by a
    power iteration on the deflated matrix from deterministic probes (a
    linear ramp and the largest column's coordinate vector). Any larger
    direction found restarts the main iteration from it.
    """
    M = as_matrix(M)
    if M.size == 0:
        return 0.0
    col_norms = np.linalg.norm(M, axis=0)
    if float(col_norms.max()) == 0.0:
        return 0.0
    MtM = M.T @ M
    m = MtM.shape[0]
    est, v = _power_iteration(MtM, np.ones(m))
    basis = np.zeros(m)
    basis[int(np.argmax(col_norms))] = 1.0
    probes = (np.arange(1.0, m + 1.0), basis)
    for _ in range(m):
        improved = False
        deflated = MtM - est * np.outer(v, v)
        for probe in probes:
            x = probe - (probe @ v) * v
            if np.linalg.norm(x) <= 1e-12 * np.linalg.norm(probe):
                continue
            other, w = _power_iteration(deflated, x)
            if other > est * (1 + 1e-10):
                est, v = _power_iteration(MtM, w)
                improved = True
                break
        if not improved:
            break
    return float(np.sqrt(max(est, 0.0)))


def _power_iteration(S: np.ndarray, x: np.ndarray) -> tuple[float, np.ndarray]:
    """Rayleigh-quotient estimate of the top eigenvalue of PSD ``S`` and its vector."""
    x = x / np.linalg.norm(x)
    prev = 0.0
    cur = 0.0
    for _ in range(POWER_MAX_ITER):
        y = S @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0, x
        x = y / ny
        # Rayleigh quotient; its error is quadratic in the vector error
        cur = float(x @ S @ x)
        if abs(cur - prev) <= 1e-14 * abs(cur):
            break
        prev = cur
    return cur, x


def norm_inf_rowsum(M) -> float:
    """max_i ||m_i||_1."""
    M = as_matrix(M)
    if M.size == 0:
        return 0.0
    return float(np.abs(M).sum(axis=1).max())


def norm_inf_2(M) -> float:
    """max_i ||m_i||_2."""
    M = as_matrix(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, axis=1).max())


def row_norms(M: np.ndarray) -> np.ndarray:
    return np.linalg.norm(M, axis=1)
