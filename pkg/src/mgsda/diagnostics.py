"""Population-level support-recovery diagnostics.

Everything here is a deterministic function of a :class:`PopulationSpec`
(plus ``n`` and user constants where the quantity is a sample-size or
tuning rule). Unknown absolute constants are parameters: ``K`` for the
sample-size requirement, ``K_lambda`` for the tuning rule and ``K_psi`` for
the signal-strength requirement.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import EmptySupport, FixedPointDiverged, NoComplement
from .numerics import (
    norm_inf_2,
    norm_inf_rowsum,
    row_norms,
    spd_factor,
    spd_inverse,
    spd_solve,
    spectral_norm,
)
from .population import PopulationSpec, max_sigma_conditional
from .solver import Problem, SolverOptions, solve

DEFAULT_K = 1.0
DEFAULT_K_LAMBDA = 0.5
DEFAULT_K_PSI = 1.0

LAMBDA_RULE_NOTE = (
    "lambda_sim = 0.5 * (1 + ||Delta_A^T Sigma_AA^-1 Delta_A||_2)^-1 * sqrt(log(p - s) / n); "
    "the printed rule carries a stray trailing transpose on Delta_A, read as Delta_A"
)


@dataclass(frozen=True)
class _Blocks:
    """Support-restricted pieces reused by most diagnostics."""

    sigma_aa: np.ndarray
    delta_a: np.ndarray
    sigma_inv_delta: np.ndarray  # Sigma_AA^{-1} Delta_A (= Psi_A)
    quad: np.ndarray  # Delta_A^T Sigma_AA^{-1} Delta_A
    gram_inv: np.ndarray  # (Sigma_AA + Delta_A Delta_A^T)^{-1}


def _blocks(spec: PopulationSpec) -> _Blocks:
    if spec.s == 0:
        raise EmptySupport("population support is empty")
    S = spec.sigma_aa()
    Da = spec.delta_a()
    F = spd_factor(S)
    SiD = spd_solve(F, Da)
    quad = Da.T @ SiD
    quad = 0.5 * (quad + quad.T)
    gram_inv = spd_inverse(spd_factor(S + Da @ Da.T))
    return _Blocks(S, Da, SiD, quad, gram_inv)


def _require_complement(spec: PopulationSpec):
    if spec.p == spec.s:
        raise NoComplement("p = s: the support has no complement")


def default_subgradient(spec: PopulationSpec) -> np.ndarray:
    """Row-normalised ``Psi_A``."""
    psi_a = spec.psi[spec.support]
    return psi_a / row_norms(psi_a)[:, None]


def irrepresentability(spec: PopulationSpec, s_A=None) -> tuple[float | None, float]:
    """``(||Sigma_cA Sigma_AA^{-1} s_A||_{inf,2}, ||Sigma_cA Sigma_AA^{-1}||_inf)``.

    The second value bounds the first for every ``s_A`` with unit rows. Both
    are 0 when the complement is empty; the first is None without ``s_A``.
    """
    if spec.s == 0:
        raise EmptySupport("population support is empty")
    A, Ac = spec.support, spec.complement
    if Ac.size == 0:
        return (0.0 if s_A is not None else None), 0.0
    F = spd_factor(spec.sigma_aa())
    # Sigma_cA Sigma_AA^{-1} = (Sigma_AA^{-1} Sigma_Ac)^T
    M = spd_solve(F, spec.sigma[np.ix_(A, Ac)]).T
    worst = norm_inf_rowsum(M)
    exact = None
    if s_A is not None:
        s_A = np.asarray(s_A, dtype=float)
        if s_A.shape != (spec.s, spec.G - 1):
            raise ValueError(f"s_A must be {spec.s} x {spec.G - 1}, got {s_A.shape}")
        exact = norm_inf_2(M @ s_A)
    return exact, worst


def psi_min(spec: PopulationSpec) -> float:
    if spec.s == 0:
        raise EmptySupport("population support is empty")
    return float(row_norms(spec.psi[spec.support]).min())


def lambda_bounds_thm1(spec: PopulationSpec) -> tuple[float, float]:
    """Largest admissible penalty for exact population recovery, and its sqrt(s) relaxation.

    Returns ``(rhs_inf, rhs_sqrt_s)`` where the first uses the max-row-sum
    norm of ``(Sigma_AA + Delta_A Delta_A^T)^{-1}`` and the second replaces it
    by ``sqrt(s)`` times the spectral norm, so ``rhs_sqrt_s <= rhs_inf``.
    """
    b = _blocks(spec)
    pmin = psi_min(spec)
    damp = 1.0 + spectral_norm(b.quad)
    rhs_inf = pmin / (norm_inf_rowsum(b.gram_inv) * damp)
    rhs_sqrt = pmin / (math.sqrt(spec.s) * spectral_norm(b.gram_inv) * damp)
    return rhs_inf, rhs_sqrt


@dataclass(frozen=True)
class OracleSolution:
    psi_hat_a: np.ndarray  # s x (G-1), rows in support order
    subgradient: np.ndarray
    iterations: int
    fixed_point_converged: bool
    solver_max_diff: float  # max |closed form (zero padded) - population BCD solve|
    solver_support: np.ndarray
    warnings: tuple[str, ...] = field(default=())


def theorem1_solution(
    spec: PopulationSpec,
    lam: float,
    tol: float = 1e-10,
    max_iter: int = 1000,
    solver_opts: SolverOptions | None = None,
) -> OracleSolution:
    """Closed-form population solution on the support.

    ``Psi_hat_A = Psi_A (I + Delta_A^T Sigma_AA^{-1} Delta_A)^{-1} - lam (Sigma_AA + Delta_A Delta_A^T)^{-1} s_A``
    where ``s_A`` (the unit rows of ``Psi_hat_A``) is found by fixed-point
    iteration from the row-normalised ``Psi_A``. The result is cross-checked
    against the coordinate-descent solve of the population problem; if the
    iteration fails, the solver's rows on A are returned and flagged.
    """
    b = _blocks(spec)
    k = spec.G - 1
    base = np.linalg.solve((np.eye(k) + b.quad).T, b.sigma_inv_delta.T).T
    notes = []

    rhs_inf, _ = lambda_bounds_thm1(spec)
    s_A = default_subgradient(spec)
    converged = False
    it = 0
    if lam == 0:
        psi_hat = base
        converged = True
    else:
        for it in range(1, max_iter + 1):
            psi_hat = base - lam * b.gram_inv @ s_A
            norms = row_norms(psi_hat)
            if np.any(norms == 0):
                break
            new_s = psi_hat / norms[:, None]
            change = float(row_norms(new_s - s_A).max())
            s_A = new_s
            if change <= tol:
                psi_hat = base - lam * b.gram_inv @ s_A
                converged = True
                break
    if spec.complement.size:
        irr_exact, _ = irrepresentability(spec, s_A)
        if irr_exact >= 1:
            notes.append(f"irrepresentability {irr_exact:.6g} >= 1")
    if lam >= rhs_inf:
        notes.append(f"lambda {lam:.6g} is not below the signal bound {rhs_inf:.6g}")

    coef, _ = solve(Problem(spec.sigma, spec.delta, lam), solver_opts)
    if not converged:
        notes.append("fixed-point iteration failed; returning the solver's rows")
        psi_hat = coef.V[spec.support]
        norms = row_norms(psi_hat)
        s_A = np.divide(psi_hat, norms[:, None], out=np.zeros_like(psi_hat), where=norms[:, None] > 0)
    padded = np.zeros_like(spec.delta)
    padded[spec.support] = psi_hat
    return OracleSolution(
        psi_hat_a=psi_hat,
        subgradient=s_A,
        iterations=it,
        fixed_point_converged=converged,
        solver_max_diff=float(np.max(np.abs(padded - coef.V))),
        solver_support=coef.support,
        warnings=tuple(notes),
    )


def oracle_fixed_point(spec: PopulationSpec, lam: float, tol: float = 1e-10, max_iter: int = 1000):
    """Strict variant: raise :class:`FixedPointDiverged` instead of falling back."""
    res = theorem1_solution(spec, lam, tol, max_iter)
    if not res.fixed_point_converged:
        raise FixedPointDiverged(f"no fixed point within {max_iter} iterations")
    return res


def c2_rhs(spec: PopulationSpec, lam: float, n: int, K_psi: float = DEFAULT_K_PSI) -> float:
    """Signal-strength threshold that ``psi_min`` must exceed."""
    if n < 2:
        raise ValueError("n must be at least 2")
    b = _blocks(spec)
    k = spec.G - 1
    s = spec.s
    Sinv_diag = np.diag(spd_inverse(spd_factor(b.sigma_aa)))
    loglog = math.log(s * math.log(n))
    inner = max(float(Sinv_diag.max()) * k * loglog / n, 0.0)
    bracket = max(spectral_norm(b.quad), 1.0)
    return (
        lam
        * math.sqrt(s)
        * spectral_norm(b.gram_inv)
        * (1.0 + K_psi * bracket * (1.0 + math.sqrt(inner)))
    )


def _log_term(spec: PopulationSpec, n: int) -> float:
    if n < 3:
        raise ValueError("n must be at least 3")
    return math.log((spec.p - spec.s) * math.log(n))


def sample_complexity_core(spec: PopulationSpec, n: int) -> float:
    """``max sigma_jj.A * ||Sigma_AA^{-1}||_2 * (G-1) * s * log((p-s) log n)`` (no constant K)."""
    _require_complement(spec)
    b = _blocks(spec)
    sig_inv_norm = spectral_norm(spd_inverse(spd_factor(b.sigma_aa)))
    return max_sigma_conditional(spec) * sig_inv_norm * (spec.G - 1) * spec.s * _log_term(spec, n)


def lambda_thm2(spec: PopulationSpec, n: int, K_lambda: float = DEFAULT_K_LAMBDA) -> float:
    _require_complement(spec)
    b = _blocks(spec)
    scale = max_sigma_conditional(spec) * (spec.G - 1) * _log_term(spec, n) / n
    return K_lambda * math.sqrt(scale) / (1.0 + spectral_norm(b.quad))


def lambda_sim(spec: PopulationSpec, n: int) -> float:
    """Penalty used by the simulation study: ``0.5 (1 + ||quad||_2)^{-1} sqrt(log(p - s) / n)``."""
    _require_complement(spec)
    if n < 1:
        raise ValueError("n must be positive")
    b = _blocks(spec)
    return 0.5 * math.sqrt(math.log(spec.p - spec.s) / n) / (1.0 + spectral_norm(b.quad))


@dataclass(frozen=True)
class DiagnosticsReport:
    n: int
    p: int
    s: int
    G: int
    irrepresentability_exact: float
    irrepresentability_worst: float
    alpha: float
    psi_min: float
    lambda_max_thm1: float
    lambda_max_thm1_sqrt_s: float
    c2_rhs: float
    c2_holds: bool
    sample_complexity_core: float
    sample_size_ok: bool
    lambda_thm2: float
    lambda_sim: float
    K: float
    K_lambda: float
    K_psi: float
    note: str = LAMBDA_RULE_NOTE

    def to_lines(self) -> list[str]:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = format(v, ".17g")
            out.append(f"{f.name}={v}")
        return out


REPORT_KEYS = tuple(f.name for f in fields(DiagnosticsReport))


def diagnose(
    spec: PopulationSpec,
    n: int,
    K: float = DEFAULT_K,
    K_lambda: float = DEFAULT_K_LAMBDA,
    K_psi: float = DEFAULT_K_PSI,
) -> DiagnosticsReport:
    """All diagnostics at sample size ``n``.

    The exact irrepresentability uses the row-normalised ``Psi_A`` as the
    subgradient, and the signal-strength threshold is evaluated at
    ``lambda_thm2``.
    """
    _require_complement(spec)
    exact, worst = irrepresentability(spec, default_subgradient(spec))
    rhs_inf, rhs_sqrt = lambda_bounds_thm1(spec)
    lam2 = lambda_thm2(spec, n, K_lambda)
    c2 = c2_rhs(spec, lam2, n, K_psi)
    core = sample_complexity_core(spec, n)
    pmin = psi_min(spec)
    return DiagnosticsReport(
        n=n,
        p=spec.p,
        s=spec.s,
        G=spec.G,
        irrepresentability_exact=exact,
        irrepresentability_worst=worst,
        alpha=1.0 - exact,
        psi_min=pmin,
        lambda_max_thm1=rhs_inf,
        lambda_max_thm1_sqrt_s=rhs_sqrt,
        c2_rhs=c2,
        c2_holds=bool(pmin >= c2),
        sample_complexity_core=core,
        sample_size_ok=bool(n >= K * core),
        lambda_thm2=lam2,
        lambda_sim=lambda_sim(spec, n),
        K=K,
        K_lambda=K_lambda,
        K_psi=K_psi,
    )
