"""``mgsda`` command line: fit, predict, simulate, diagnose, plot.

Exit codes: 0 success, 2 user/config/parse error, 3 computational failure.
"""
from __future__ import annotations

import argparse
import itertools
import math
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import diagnostics, experiments, fileio, plot
from .classifier import build_model, scores
from .errors import (
    DegenerateSampleSize,
    DimensionMismatch,
    EmptyGroup,
    IndexOutOfRange,
    InvalidCorrelation,
    InvalidPriors,
    MGSDAError,
    NonFiniteInput,
    OddSupportSize,
)
from .population import scenario
from .sample_stats import LabeledDataset, compute_stats
from .solver import Problem, SolverOptions, solve

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE = 0, 2, 3

# library errors that describe bad input rather than a numerical breakdown
USER_ERRORS = (
    DegenerateSampleSize, DimensionMismatch, EmptyGroup, IndexOutOfRange,
    InvalidCorrelation, InvalidPriors, NonFiniteInput, OddSupportSize,
)

CONFIG_KEYS = {
    "structure", "p", "s", "rho", "G", "priors", "theta", "replicates", "base_seed", "seed",
    "lambda_rule", "lambda", "K_lambda", "K", "K_psi", "tol", "max_iter", "n",
}
DEFAULT_THETAS = (0.5, 1.0, 2.0, 4.0, 8.0, 16.0)


class UsageError(Exception):
    """Bad flags, config or input file; maps to exit code 2."""


def _fail(msg: str, code: int) -> int:
    print(f"mgsda: error: {msg}", file=sys.stderr)
    return code


# -- configuration ------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    """Validated scenario fields from a key=value file (lists where allowed)."""

    structures: tuple[str, ...]
    ps: tuple[int, ...]
    s: int
    rhos: tuple[float, ...]
    G: int
    priors: tuple[float, ...] | None
    thetas: tuple[float, ...]
    replicates: int
    base_seed: int
    lambda_rule: str
    lambda_value: float | None
    K: float
    K_lambda: float
    K_psi: float
    tol: float
    max_iter: int
    n: int | None

    def single(self, what: str):
        if len(self.ps) != 1 or len(self.rhos) != 1 or len(self.structures) != 1:
            raise UsageError(f"{what} needs a single structure, p and rho")
        return self.structures[0], self.ps[0], self.rhos[0]


def _num(kv, key, cast, default=None, *, check=None, desc=""):
    if key not in kv:
        return default
    try:
        value = cast(kv[key])
    except ValueError:
        raise UsageError(f"config key {key}: cannot parse {kv[key]!r}") from None
    if check is not None and not check(value):
        raise UsageError(f"config key {key}: {desc} (got {kv[key]})")
    return value


def _list(kv, key, cast, default):
    if key not in kv:
        return tuple(default)
    try:
        values = tuple(cast(v.strip()) for v in kv[key].split(",") if v.strip())
    except ValueError:
        raise UsageError(f"config key {key}: cannot parse {kv[key]!r}") from None
    if not values:
        raise UsageError(f"config key {key}: empty list")
    return values


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"config file not found: {path}")
    try:
        kv = fileio.read_keyvalue(path)
    except fileio.FormatError as exc:
        raise UsageError(str(exc)) from None
    unknown = sorted(set(kv) - CONFIG_KEYS)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    if "seed" in kv and "base_seed" in kv:
        raise UsageError("give either seed or base_seed, not both")

    finite = math.isfinite
    structures = _list(kv, "structure", str, ("toeplitz",))
    ps = _list(kv, "p", int, (100,))
    rhos = _list(kv, "rho", float, (0.0,))
    thetas = _list(kv, "theta", float, DEFAULT_THETAS)
    priors = _list(kv, "priors", float, ()) or None
    if any(p < 1 for p in ps):
        raise UsageError("config key p: must be positive")
    if any(not finite(r) for r in rhos):
        raise UsageError("config key rho: must be finite")
    if any(not (t > 0 and finite(t)) for t in thetas):
        raise UsageError("config key theta: values must be positive and finite")
    if any(b <= a for a, b in zip(thetas, thetas[1:])):
        raise UsageError("config key theta: values must be strictly increasing")
    seed_key = "base_seed" if "base_seed" in kv else "seed"
    cfg = RunConfig(
        structures=structures,
        ps=ps,
        s=_num(kv, "s", int, 10, check=lambda v: v >= 0, desc="must be >= 0"),
        rhos=rhos,
        G=_num(kv, "G", int, 3, check=lambda v: v == 3, desc="only G = 3 scenarios exist"),
        priors=priors,
        thetas=thetas,
        replicates=_num(kv, "replicates", int, 100, check=lambda v: v >= 1, desc="must be >= 1"),
        base_seed=_num(kv, seed_key, int, 0, check=lambda v: 0 <= v <= experiments.MASK64,
                       desc="must be an unsigned 64-bit integer"),
        lambda_rule=_num(kv, "lambda_rule", str, "sim", check=lambda v: v in experiments.LAMBDA_RULES,
                         desc=f"must be one of {experiments.LAMBDA_RULES}"),
        lambda_value=_num(kv, "lambda", float, None, check=lambda v: v >= 0 and finite(v),
                          desc="must be finite and >= 0"),
        K=_num(kv, "K", float, diagnostics.DEFAULT_K, check=lambda v: v > 0, desc="must be > 0"),
        K_lambda=_num(kv, "K_lambda", float, diagnostics.DEFAULT_K_LAMBDA, check=lambda v: v > 0,
                      desc="must be > 0"),
        K_psi=_num(kv, "K_psi", float, diagnostics.DEFAULT_K_PSI, check=lambda v: v > 0, desc="must be > 0"),
        tol=_num(kv, "tol", float, 1e-8, check=lambda v: v > 0 and finite(v), desc="must be > 0"),
        max_iter=_num(kv, "max_iter", int, 50_000, check=lambda v: v >= 1, desc="must be >= 1"),
        n=_num(kv, "n", int, None, check=lambda v: v >= 1, desc="must be >= 1"),
    )
    if cfg.lambda_rule == "value" and cfg.lambda_value is None:
        raise UsageError("lambda_rule=value needs a lambda key")
    return cfg


def _population(cfg: RunConfig):
    structure, p, rho = cfg.single("this command")
    try:
        return scenario(structure, p, cfg.s, rho, cfg.priors)
    except (ValueError, MGSDAError) as exc:
        raise UsageError(f"invalid scenario: {exc}") from None


# -- commands -----------------------------------------------------------------

def _read_training(data_path, label_col):
    if not Path(data_path).is_file():
        raise UsageError(f"data file not found: {data_path}")
    header, body = fileio.read_table(data_path)
    if label_col not in header:
        raise UsageError(f"{data_path}: label column {label_col!r} not in header")
    if not body:
        raise UsageError(f"{data_path}: no data rows")
    features = [h for h in header if h != label_col]
    if not features:
        raise UsageError(f"{data_path}: no feature columns")
    li = header.index(label_col)
    raw = [row[li].strip() for row in body]
    for i, v in enumerate(raw, 2):
        if v == "":
            raise UsageError(f"{data_path}: row {i}, column {label_col!r}: empty label")
    X = fileio.numeric_columns(data_path, header, body, features)
    y, names = fileio.encode_labels(raw)
    return X, y, names, features


def cmd_fit(args) -> int:
    if args.out is None:
        raise UsageError("fit needs --out")
    if args.lambda_rule is None:
        args.lambda_rule = "value" if args.lam is not None else None
    if args.lambda_rule is None:
        raise UsageError("fit needs --lambda or --lambda-rule")
    if args.lambda_rule == "value" and args.lam is None:
        raise UsageError("--lambda-rule value needs --lambda")
    if args.lam is not None and not (args.lam >= 0 and math.isfinite(args.lam)):
        raise UsageError("--lambda must be finite and >= 0")
    if args.lambda_rule in ("sim", "thm2") and args.config is None:
        raise UsageError(f"--lambda-rule {args.lambda_rule} needs a scenario --config")

    X, y, names, features = _read_training(args.data, args.labels)
    G = len(names)
    if G < 2:
        raise UsageError(f"{args.data}: need at least two distinct labels")
    scale = np.ones(X.shape[1])
    if args.standardize:
        pooled = compute_stats(LabeledDataset(X, y, G))
        sd = np.sqrt(np.diag(pooled.W))
        scale = np.where(sd > 0, sd, 1.0)
    stats = compute_stats(LabeledDataset(X / scale, y, G))
    for note in stats.warnings:
        print(f"warning: {note}", file=sys.stderr)

    if args.lambda_rule == "value":
        lam = float(args.lam)
    else:
        cfg = load_config(args.config)
        spec = _population(cfg)
        if spec.p != stats.p or spec.G != G:
            raise UsageError(
                f"scenario has p={spec.p}, G={spec.G} but data has p={stats.p}, G={G}"
            )
        if args.lambda_rule == "sim":
            lam = diagnostics.lambda_sim(spec, stats.n)
        else:
            lam = diagnostics.lambda_thm2(spec, stats.n, cfg.K_lambda)

    coef, report = solve(Problem(stats.W, stats.D, lam), SolverOptions(tol=args.tol, max_iter=args.max_iter))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model = build_model(stats, coef.V)
    fileio.write_model(args.out, model, lam=lam, labels=names, features=features, scale=scale, report=report)
    if coef.support.size == 0:
        print("warning: empty support; the model classifies by group priors only", file=sys.stderr)
    if not report.converged:
        print(f"warning: solver stopped after {report.iterations} sweeps without converging", file=sys.stderr)
    print(f"lambda={fileio.fmt(lam)}")
    print(f"support_size={coef.support.size}")
    print(f"kkt_residual={fileio.fmt(report.kkt_residual)}")
    print(f"converged={fileio.fmt(report.converged)}")
    return EXIT_OK


def cmd_predict(args) -> int:
    if args.model is None or args.out is None:
        raise UsageError("predict needs --model, --data and --out")
    for path in (args.model, args.data):
        if not Path(path).is_file():
            raise UsageError(f"file not found: {path}")
    model, meta = fileio.read_model(args.model)
    header, body = fileio.read_table(args.data)
    # match features by name when possible, otherwise by position
    others = [h for h in header if h != args.labels]
    if set(meta["features"]) <= set(header):
        columns = meta["features"]
    elif len(others) == model.p:
        columns = others
    else:
        raise UsageError(f"{args.data}: has {len(others)} feature columns, model expects {model.p}")
    X = fileio.numeric_columns(args.data, header, body, columns) / meta["scale"]
    S = scores(model, X) if X.shape[0] else np.zeros((0, model.G))
    labels = np.argmin(S, axis=1) if S.shape[0] else np.zeros(0, dtype=int)
    rows = [[meta["labels"][g], *S[i]] for i, g in enumerate(labels)]
    fileio.write_csv(args.out, ["label", *(f"score_{g + 1}" for g in range(model.G))], rows)
    return EXIT_OK


def _sweep_configs(cfg: RunConfig, args):
    replicates = args.replicates if args.replicates is not None else cfg.replicates
    seed = args.seed if args.seed is not None else cfg.base_seed
    if replicates < 1:
        raise UsageError("--replicates must be >= 1")
    if not 0 <= seed <= experiments.MASK64:
        raise UsageError("--seed must be an unsigned 64-bit integer")
    out = []
    for structure, p, rho in itertools.product(cfg.structures, cfg.ps, cfg.rhos):
        try:
            sc = experiments.ScenarioConfig(
                structure=structure, p=p, s=cfg.s, rho=rho, G=cfg.G, thetas=cfg.thetas,
                replicates=replicates, base_seed=seed, lambda_rule=cfg.lambda_rule,
                lambda_value=cfg.lambda_value, K_lambda=cfg.K_lambda, tol=cfg.tol,
                max_iter=cfg.max_iter, priors=cfg.priors,
            )
            sc.population()
        except (ValueError, MGSDAError) as exc:
            raise UsageError(f"invalid scenario (structure={structure}, p={p}, rho={rho}): {exc}") from None
        out.append(sc)
    return out


def cmd_simulate(args) -> int:
    if args.config is None or args.out is None:
        raise UsageError("simulate needs --config and --out")
    cfg = load_config(args.config)
    configs = _sweep_configs(cfg, args)
    try:
        workers = experiments.resolve_workers(args.threads)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    records, aggregates, failed = [], [], 0
    for sc in configs:
        result = experiments.run_sweep(sc, workers)
        records += result.records
        aggregates += result.aggregates
        failed += result.failed_count
    fileio.write_csv(args.out, fileio.RESULT_COLUMNS, fileio.result_rows(records))
    if args.aggregate is not None:
        fileio.write_csv(args.aggregate, fileio.AGGREGATE_COLUMNS, fileio.aggregate_rows(aggregates))
    if failed:
        print(f"warning: {failed} replicate(s) failed and were excluded from the means", file=sys.stderr)
    return EXIT_OK


def cmd_diagnose(args) -> int:
    if args.config is None:
        raise UsageError("diagnose needs --config")
    cfg = load_config(args.config)
    n = args.n if args.n is not None else cfg.n
    if n is None or n < 2:
        raise UsageError("diagnose needs a sample size n >= 2 (--n or config key n)")
    spec = _population(cfg)
    report = diagnostics.diagnose(spec, n, cfg.K, cfg.K_lambda, cfg.K_psi)
    text = "\n".join(report.to_lines()) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
    return EXIT_OK


def cmd_plot(args) -> int:
    if args.data is None or args.out is None:
        raise UsageError("plot needs --data (aggregate CSV) and --out")
    if not Path(args.data).is_file():
        raise UsageError(f"file not found: {args.data}")
    rows = fileio.read_aggregate(args.data)
    try:
        svg = plot.render_svg(rows)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    Path(args.out).write_text(svg)
    return EXIT_OK


COMMANDS = {
    "fit": cmd_fit, "predict": cmd_predict, "simulate": cmd_simulate,
    "diagnose": cmd_diagnose, "plot": cmd_plot,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mgsda", description="Sparse multi-group discriminant analysis.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fit = sub.add_parser("fit", help="fit a sparse discriminant model to labelled CSV data")
    fit.add_argument("--data", required=True)
    fit.add_argument("--labels", required=True, help="name of the label column")
    fit.add_argument("--lambda", dest="lam", type=float)
    fit.add_argument("--lambda-rule", choices=experiments.LAMBDA_RULES)
    fit.add_argument("--config", help="scenario config (needed for the sim and thm2 rules)")
    fit.add_argument("--out", help="model file to write")
    fit.add_argument("--tol", type=float, default=1e-8)
    fit.add_argument("--max-iter", type=int, default=50_000)
    fit.add_argument("--standardize", action="store_true",
                     help="divide each feature by its pooled within-group standard deviation")

    pred = sub.add_parser("predict", help="classify rows of a CSV with a fitted model")
    pred.add_argument("--model")
    pred.add_argument("--data", required=True)
    pred.add_argument("--labels", help="label column to ignore, if present")
    pred.add_argument("--out")

    sim = sub.add_parser("simulate", help="run a support-recovery sweep")
    sim.add_argument("--config")
    sim.add_argument("--out", help="per-replicate results CSV")
    sim.add_argument("--aggregate", help="per-theta aggregate CSV")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--replicates", type=int)
    sim.add_argument("--threads", type=int, help="worker processes (0 = all cores); default MGSDA_THREADS")

    diag = sub.add_parser("diagnose", help="population diagnostics for a scenario")
    diag.add_argument("--config")
    diag.add_argument("--n", type=int)
    diag.add_argument("--out")

    pl = sub.add_parser("plot", help="SVG line chart of an aggregate CSV")
    pl.add_argument("--data")
    pl.add_argument("--out")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return _fail(str(exc), EXIT_USAGE)
    if args.command == "fit" and args.tol <= 0:
        return _fail("--tol must be > 0", EXIT_USAGE)
    if args.command == "fit" and args.max_iter < 1:
        return _fail("--max-iter must be >= 1", EXIT_USAGE)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, fileio.FormatError) as exc:
        return _fail(str(exc), EXIT_USAGE)
    except USER_ERRORS as exc:
        return _fail(f"{type(exc).__name__}: {exc}", EXIT_USAGE)
    except MGSDAError as exc:
        return _fail(f"{type(exc).__name__}: {exc}", EXIT_COMPUTE)
    except np.linalg.LinAlgError as exc:
        return _fail(f"linear algebra failure: {exc}", EXIT_COMPUTE)
    except OSError as exc:
        return _fail(str(exc), EXIT_USAGE)


if __name__ == "__main__":
    sys.exit(main())
