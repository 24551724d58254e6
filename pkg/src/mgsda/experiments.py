"""Support-recovery simulations over a grid of rescaled sample sizes.

Randomness
----------
Every replicate owns an independent stream. Its 64-bit key is derived from
``(base_seed, theta_index, replicate)`` by chaining the SplitMix64 finaliser
(increment ``0x9E3779B97F4A7C15``, multipliers ``0xBF58476D1CE4E5B9`` and
``0x94D049BB133111EB``, shifts 30/27/31)::

    key = mix(mix(mix(base_seed) ^ theta_index) ^ replicate)

and used directly as the key of a Philox-4x64 counter-based generator
(counter starting at zero). Records therefore do not depend on execution
order or on how many workers run the sweep.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import diagnostics
from .errors import DegenerateDraw, IndexOutOfRange, MGSDAError
from .population import STRUCTURES, PopulationSpec, scenario
from .sample_stats import LabeledDataset, compute_stats, contrast_matrix
from .solver import Problem, SolverOptions, solve

MASK64 = (1 << 64) - 1
LABEL_RETRIES = 100
LAMBDA_RULES = ("sim", "thm2", "value")


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def cell_seed(base_seed: int, theta_index: int, replicate: int) -> int:
    h = splitmix64(base_seed & MASK64)
    h = splitmix64(h ^ theta_index)
    return splitmix64(h ^ replicate)


def make_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed & MASK64))


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return make_generator(int(seed))


def sample_dataset(spec: PopulationSpec, n: int, seed) -> LabeledDataset:
    """Draw ``n`` labelled observations from the Gaussian mixture.

    Labels are i.i.d. from the priors and redrawn (up to 100 attempts) until
    every group is present; features are ``mean_g + L z`` with ``L`` the
    Cholesky factor of ``Sigma``.
    """
    G = spec.G
    if n < G:
        raise DegenerateDraw(f"n = {n} cannot cover {G} groups")
    rng = _as_generator(seed)
    for _ in range(LABEL_RETRIES):
        y = rng.choice(G, size=n, p=spec.priors)
        if np.unique(y).size == G:
            break
    else:
        raise DegenerateDraw(f"some group stayed empty after {LABEL_RETRIES} label draws")
    Z = rng.standard_normal((n, spec.p))
    X = spec.means[y] + Z @ spec.factor.L.T
    return LabeledDataset(X, y + 1, G)


def hamming(A_hat, A, p: int) -> int:
    """Size of the symmetric difference of two index sets within ``0..p-1``."""
    a = {int(i) for i in A_hat}
    b = {int(i) for i in A}
    if any(i < 0 or i >= p for i in a | b):
        raise IndexOutOfRange(f"indices must lie in 0..{p - 1}")
    return len(a ^ b)


def sample_size(theta: float, s: int, p: int) -> int:
    """``ceil(theta * s * log p)`` with the natural logarithm."""
    return int(math.ceil(theta * s * math.log(p)))


@dataclass(frozen=True)
class ScenarioConfig:
    structure: str = "toeplitz"
    p: int = 100
    s: int = 10
    rho: float = 0.0
    G: int = 3
    thetas: tuple[float, ...] = (1.0, 2.0, 4.0, 8.0)
    replicates: int = 100
    base_seed: int = 0
    lambda_rule: str = "sim"
    lambda_value: float | None = None
    K_lambda: float = diagnostics.DEFAULT_K_LAMBDA
    tol: float = 1e-8
    max_iter: int = 50_000
    priors: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.structure not in STRUCTURES:
            raise ValueError(f"structure must be one of {STRUCTURES}")
        if self.G != 3:
            raise ValueError("the simulation mean layout is defined for G = 3 only")
        if self.s % 2 or not 0 < self.s < self.p:
            raise ValueError("s must be even with 0 < s < p")
        th = tuple(float(t) for t in self.thetas)
        if not th or any(t <= 0 or not math.isfinite(t) for t in th):
            raise ValueError("theta values must be positive")
        if any(b <= a for a, b in zip(th, th[1:])):
            raise ValueError("theta values must be strictly increasing")
        object.__setattr__(self, "thetas", th)
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.lambda_rule not in LAMBDA_RULES:
            raise ValueError(f"lambda_rule must be one of {LAMBDA_RULES}")
        if self.lambda_rule == "value" and (self.lambda_value is None or self.lambda_value < 0):
            raise ValueError("lambda_rule=value needs a non-negative lambda")
        if self.base_seed < 0 or self.base_seed > MASK64:
            raise ValueError("base_seed must be an unsigned 64-bit integer")

    def population(self) -> PopulationSpec:
        return scenario(self.structure, self.p, self.s, self.rho, self.priors)


@dataclass(frozen=True)
class CellRecord:
    theta: float
    p: int
    s: int
    rho: float
    structure: str
    replicate: int
    seed: int
    n: int
    lam: float
    hamming: int  # -1 marks a failed replicate
    support_size: int
    converged: bool
    error: str = ""

    @property
    def failed(self) -> bool:
        return self.hamming < 0


@dataclass(frozen=True)
class Aggregate:
    theta: float
    p: int
    s: int
    rho: float
    structure: str
    mean_hamming: float
    stderr: float
    replicates_used: int


@dataclass(frozen=True)
class SweepResult:
    config: ScenarioConfig
    records: tuple[CellRecord, ...]
    aggregates: tuple[Aggregate, ...] = field(default=())

    @property
    def failed_count(self) -> int:
        return sum(r.failed for r in self.records)


def choose_lambda(config: ScenarioConfig, spec: PopulationSpec, n: int) -> float:
    if config.lambda_rule == "sim":
        return diagnostics.lambda_sim(spec, n)
    if config.lambda_rule == "thm2":
        return diagnostics.lambda_thm2(spec, n, config.K_lambda)
    return float(config.lambda_value)


def run_replicate(config: ScenarioConfig, theta_index: int, replicate: int, spec=None) -> CellRecord:
    spec = spec if spec is not None else config.population()
    theta = config.thetas[theta_index]
    n = sample_size(theta, config.s, config.p)
    seed = cell_seed(config.base_seed, theta_index, replicate)
    lam = choose_lambda(config, spec, n)
    common = dict(
        theta=theta, p=config.p, s=config.s, rho=config.rho, structure=config.structure,
        replicate=replicate, seed=seed, n=n, lam=lam,
    )
    try:
        data = sample_dataset(spec, n, seed)
        stats = compute_stats(data)
        coef, report = solve(
            Problem(stats.W, stats.D, lam), SolverOptions(tol=config.tol, max_iter=config.max_iter)
        )
    except MGSDAError as exc:
        return CellRecord(**common, hamming=-1, support_size=-1, converged=False,
                          error=type(exc).__name__)
    return CellRecord(
        **common,
        hamming=hamming(coef.support, spec.support, config.p),
        support_size=int(coef.support.size),
        converged=report.converged,
    )


def _run_cell(args):
    config, theta_index, replicate = args
    return run_replicate(config, theta_index, replicate)


def aggregate(config: ScenarioConfig, records) -> tuple[Aggregate, ...]:
    out = []
    for theta in config.thetas:
        vals = np.array([r.hamming for r in records if r.theta == theta and not r.failed], dtype=float)
        k = vals.size
        mean = float(vals.mean()) if k else math.nan
        se = float(vals.std(ddof=1) / math.sqrt(k)) if k > 1 else 0.0
        out.append(Aggregate(theta, config.p, config.s, config.rho, config.structure, mean, se, k))
    return tuple(out)


def resolve_workers(workers: int | None = None) -> int:
    """Worker count: explicit value, else ``MGSDA_THREADS`` (0 = all cores), else 1."""
    if workers is None:
        raw = os.environ.get("MGSDA_THREADS", "1")
        try:
            workers = int(raw)
        except ValueError:
            raise ValueError(f"MGSDA_THREADS must be an integer, got {raw!r}") from None
    if workers < 0:
        raise ValueError("worker count must be >= 0")
    if workers == 0:
        workers = os.cpu_count() or 1
    return workers


def run_sweep(config: ScenarioConfig, workers: int | None = None) -> SweepResult:
    """Run every (theta, replicate) cell; records come back theta-major, replicate-minor."""
    cells = [(config, t, r) for t in range(len(config.thetas)) for r in range(config.replicates)]
    nworkers = min(resolve_workers(workers), len(cells))
    if nworkers <= 1:
        spec = config.population()
        records = [run_replicate(config, t, r, spec) for _, t, r in cells]
    else:
        with ProcessPoolExecutor(max_workers=nworkers) as pool:
            records = list(pool.map(_run_cell, cells, chunksize=max(1, len(cells) // (4 * nworkers))))
    return SweepResult(config=config, records=tuple(records), aggregates=aggregate(config, records))


@dataclass(frozen=True)
class ContrastMomentReport:
    draws: int
    n: int
    mean_max_abs_dev: float
    mean_max_z: float
    cov_max_z: float  # per-column covariance of D - E[D | counts] against Sigma/n
    cov_max_rel_dev_support: float
    cross_max_z: float  # cross-column covariance of D - E[D | counts] against 0
    raw_cov_max_z: float  # per-column covariance of D itself (count noise included)
    raw_cov_max_rel_dev_support: float


def lemma8_moment_check(spec: PopulationSpec, n: int, draws: int, seed) -> ContrastMomentReport:
    """Monte-Carlo check of the first two moments of the sample contrast matrix.

    The mean of ``D`` is compared with ``Delta`` using the standard error
    ``sqrt(Sigma_jj / (n * draws))``. Given the group counts, every column of
    ``D`` has covariance exactly ``Sigma / n`` and distinct columns are
    uncorrelated, so the covariance checks use the residual
    ``D - E[D | counts]``, whose conditional mean is the contrast matrix
    evaluated at the observed proportions. The unconditional covariance of
    ``D`` also carries the variability of the counts; it is reported in the
    ``raw_*`` fields for reference.
    """
    if draws < 1000:
        raise ValueError("draws must be at least 1000")
    rng = _as_generator(seed)
    p, k = spec.p, spec.G - 1
    Ds = np.empty((draws, p, k))
    resid = np.empty((draws, p, k))
    for i in range(draws):
        data = sample_dataset(spec, n, rng)
        stats = compute_stats(data)
        Ds[i] = stats.D
        resid[i] = stats.D - contrast_matrix(stats.counts, spec.means) / math.sqrt(n)

    var = np.diag(spec.sigma)
    mean_dev = Ds.mean(axis=0) - spec.delta
    se_mean = np.sqrt(var / (n * draws))[:, None]
    target = spec.sigma / n
    se_cov = np.sqrt((target**2 + np.outer(np.diag(target), np.diag(target))) / draws)
    se_cross = np.sqrt(np.outer(np.diag(target), np.diag(target)) / draws)
    A = spec.support if spec.s else np.arange(p)
    block = np.ix_(A, A)

    def col_stats(sample):
        zs, rels = [], []
        for r in range(k):
            C = np.cov(sample[:, :, r], rowvar=False)
            zs.append(np.max(np.abs(C - target) / se_cov))
            rels.append(np.max(np.abs(C[block] - target[block]) / np.abs(target[block]).max()))
        return float(max(zs)), float(max(rels))

    cov_z, cov_rel = col_stats(resid)
    raw_z, raw_rel = col_stats(Ds)
    cross = 0.0
    centered = resid - resid.mean(axis=0)
    for r in range(k):
        for t in range(r + 1, k):
            Cx = centered[:, :, r].T @ centered[:, :, t] / (draws - 1)
            cross = max(cross, float(np.max(np.abs(Cx) / se_cross)))
    return ContrastMomentReport(
        draws=draws,
        n=n,
        mean_max_abs_dev=float(np.abs(mean_dev).max()),
        mean_max_z=float(np.max(np.abs(mean_dev) / se_mean)),
        cov_max_z=cov_z,
        cov_max_rel_dev_support=cov_rel,
        cross_max_z=cross,
        raw_cov_max_z=raw_z,
        raw_cov_max_rel_dev_support=raw_rel,
    )


def with_overrides(config: ScenarioConfig, **kw) -> ScenarioConfig:
    return replace(config, **{k: v for k, v in kw.items() if v is not None})
