"""Text formats: key=value configs, the model file and CSV tables.

Floats are written with 17 significant digits so 64-bit values round-trip.
Feature indices in files are 1-based.
"""
from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .classifier import ClassifierModel

MODEL_FORMAT = "mgsda-model/1"
RESULT_COLUMNS = (
    "theta", "p", "s", "rho", "structure", "replicate", "seed", "n",
    "lambda", "hamming", "support_size", "converged",
)
AGGREGATE_COLUMNS = (
    "theta", "p", "s", "rho", "structure", "mean_hamming", "stderr", "replicates_used",
)


class FormatError(ValueError):
    """Malformed input file."""


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def fmt_row(values) -> str:
    return ",".join(fmt(v) for v in values)


def read_keyvalue(path) -> dict[str, str]:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are skipped."""
    out: dict[str, str] = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise FormatError(f"{path}:{lineno}: empty key")
        if key in out:
            raise FormatError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def parse_floats(text: str, what: str) -> list[float]:
    if text == "":
        return []
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise FormatError(f"{what}: expected comma-separated numbers, got {text!r}") from None


def parse_ints(text: str, what: str) -> list[int]:
    if text == "":
        return []
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise FormatError(f"{what}: expected comma-separated integers, got {text!r}") from None


# -- model file -------------------------------------------------------------

def write_model(path, model: ClassifierModel, *, lam, labels, features, scale, report) -> None:
    k = model.V.shape[1]
    support = np.flatnonzero(np.linalg.norm(model.V, axis=1) > 0) + 1
    lines = [
        f"format={MODEL_FORMAT}",
        f"p={model.p}",
        f"G={model.G}",
        f"n={model.n}",
        f"lambda={fmt(lam)}",
        "labels=" + ",".join(labels),
        "features=" + ",".join(features),
        "counts=" + fmt_row(model.counts),
        "scale=" + fmt_row(scale),
        "support=" + ",".join(str(i) for i in support),
        f"solver.iterations={report.iterations}",
        f"solver.objective={fmt(report.objective)}",
        f"solver.kkt_residual={fmt(report.kkt_residual)}",
        f"solver.converged={fmt(report.converged)}",
    ]
    lines += [f"mean.{g + 1}=" + fmt_row(model.means[g]) for g in range(model.G)]
    lines += [f"V.{i + 1}=" + fmt_row(model.V[i]) for i in range(model.p)]
    lines += [f"gram.{r + 1}=" + fmt_row(model.gram[r]) for r in range(k)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_model(path):
    """Return ``(model, meta)`` where meta holds labels, features, scale, lambda, support."""
    from .classifier import model_from_parts

    kv = read_keyvalue(path)
    if kv.get("format") != MODEL_FORMAT:
        raise FormatError(f"{path}: not an {MODEL_FORMAT} file")
    try:
        p = int(kv["p"])
        G = int(kv["G"])
        labels = kv["labels"].split(",")
        features = kv["features"].split(",") if kv["features"] else []
        counts = np.array(parse_ints(kv["counts"], "counts"))
        scale = np.array(parse_floats(kv["scale"], "scale"))
        means = np.array([parse_floats(kv[f"mean.{g + 1}"], "mean") for g in range(G)])
        V = np.array([parse_floats(kv[f"V.{i + 1}"], "V") for i in range(p)])
        gram = np.array([parse_floats(kv[f"gram.{r + 1}"], "gram") for r in range(G - 1)])
        lam = float(kv["lambda"])
        support = parse_ints(kv["support"], "support")
    except KeyError as exc:
        raise FormatError(f"{path}: missing key {exc.args[0]!r}") from None
    shapes_ok = (
        len(labels) == G and len(features) == p and counts.shape == (G,) and scale.shape == (p,)
        and means.shape == (G, p) and V.shape == (p, G - 1) and gram.shape == (G - 1, G - 1)
    )
    if not shapes_ok:
        raise FormatError(f"{path}: inconsistent dimensions")
    model = model_from_parts(V, means, counts, gram)
    meta = dict(labels=labels, features=features, scale=scale, lam=lam, support=support)
    return model, meta


# -- data CSV ---------------------------------------------------------------

def read_table(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if any(c.strip() for c in r)]
    for i, r in enumerate(body, 2):
        if len(r) != len(header):
            raise FormatError(f"{path}: row {i} has {len(r)} fields, header has {len(header)}")
    return header, body


def numeric_columns(path, header, body, columns) -> np.ndarray:
    idx = [header.index(c) for c in columns]
    X = np.empty((len(body), len(idx)))
    for i, row in enumerate(body):
        for j, c in enumerate(idx):
            try:
                X[i, j] = float(row[c])
            except ValueError:
                raise FormatError(
                    f"{path}: row {i + 2}, column {header[c]!r}: not a number ({row[c]!r})"
                ) from None
    if not np.all(np.isfinite(X)):
        bad = np.argwhere(~np.isfinite(X))[0]
        raise FormatError(f"{path}: row {bad[0] + 2}, column {columns[bad[1]]!r}: non-finite value")
    return X


def encode_labels(values: list[str]) -> tuple[np.ndarray, list[str]]:
    """Map raw labels to ``1..G``: numerically sorted if all integers, else lexicographically."""
    distinct = sorted(set(values))
    try:
        distinct = sorted(distinct, key=int)
    except ValueError:
        pass
    index = {v: g + 1 for g, v in enumerate(distinct)}
    return np.array([index[v] for v in values], dtype=np.int64), distinct


def write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(fmt_row(row) if not any(isinstance(v, str) for v in row)
                  else ",".join(v if isinstance(v, str) else fmt(v) for v in row))
        buf.write("\n")
    Path(path).write_text(buf.getvalue())


def result_rows(records):
    for r in records:
        yield (r.theta, r.p, r.s, r.rho, r.structure, r.replicate, r.seed, r.n,
               r.lam, r.hamming, r.support_size, r.converged)


def aggregate_rows(aggregates):
    for a in aggregates:
        yield (a.theta, a.p, a.s, a.rho, a.structure, a.mean_hamming, a.stderr, a.replicates_used)


def read_aggregate(path) -> list[dict]:
    header, body = read_table(path)
    if tuple(header) != AGGREGATE_COLUMNS:
        raise FormatError(f"{path}: expected columns {','.join(AGGREGATE_COLUMNS)}")
    if not body:
        raise FormatError(f"{path}: no aggregate rows")
    out = []
    for i, row in enumerate(body, 2):
        try:
            out.append(dict(
                theta=float(row[0]), p=int(row[1]), s=int(row[2]), rho=float(row[3]),
                structure=row[4], mean_hamming=float(row[5]), stderr=float(row[6]),
                replicates_used=int(row[7]),
            ))
        except ValueError:
            raise FormatError(f"{path}: row {i}: malformed value") from None
    return out
