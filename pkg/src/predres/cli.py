"""Command-line entry point.

Subcommands map one-to-one onto the engine schemes (plus ``selftest``),
ingest CSV data, and write three artifacts into the output directory:
``draws.csv`` (one row per run), ``summary.json`` (config echo, per-column
summaries, diagnostics counters), and optionally ``trajectories.csv``.
Outputs are a pure function of the input file bytes and argv; re-running
with the same seed reproduces draws.csv byte for byte.
"""

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import engine
from .errors import ParseError, PredresError
from .hill import hill_init, sample_next
from .rng import RngStream
from .transforms import parse_transform


def read_csv(path, has_header=False, columns=None):
    """Read a numeric CSV into an (n, k) array.

    Returns (matrix, column_names); names come from the header when present,
    otherwise they are 1-based indices as strings. ``columns`` optionally
    selects a subset by header name or 1-based index (comma-separated).
    Parse failures name the offending file row and column.
    """
    rows = []
    header = None
    with open(path, newline="") as fh:
        for row_idx, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if has_header and header is None:
                header = [c.strip() for c in row]
                continue
            vals = []
            for col_idx, cell in enumerate(row, start=1):
                text = cell.strip()
                try:
                    v = float(text)
                except ValueError:
                    raise ParseError(
                        f"{path}: row {row_idx} column {col_idx}: could not parse {text!r}"
                    )
                if not math.isfinite(v):
                    raise ParseError(
                        f"{path}: row {row_idx} column {col_idx}: non-finite value {text!r}"
                    )
                vals.append(v)
            rows.append((row_idx, vals))
    if not rows:
        raise ParseError(f"{path}: no data rows")
    width = len(rows[0][1])
    for row_idx, vals in rows:
        if len(vals) != width:
            raise ParseError(
                f"{path}: row {row_idx}: expected {width} columns, got {len(vals)}"
            )
    matrix = np.asarray([vals for _, vals in rows], dtype=float)
    names = header if header is not None else [str(j + 1) for j in range(width)]
    if len(names) != width:
        raise ParseError(f"{path}: header has {len(names)} names for {width} columns")
    if columns:
        idx = []
        for token in columns.split(","):
            token = token.strip()
            if header is not None and token in header:
                idx.append(header.index(token))
            else:
                try:
                    j = int(token)
                except ValueError:
                    raise ParseError(f"unknown column {token!r}")
                if not 1 <= j <= width:
                    raise ParseError(f"column index {j} out of range 1..{width}")
                idx.append(j - 1)
        matrix = matrix[:, idx]
        names = [names[j] for j in idx]
    return matrix, names


def _format_float(v):
    return repr(float(v))


def write_outputs(draws, summary, out_dir):
    """Write draws.csv, summary.json and (when recorded) trajectories.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    draws_path = out / "draws.csv"
    with open(draws_path, "w", newline="") as fh:
        fh.write(",".join(draws.columns) + "\n")
        for row in draws.draws:
            fh.write(",".join(_format_float(v) for v in row) + "\n")
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if draws.trajectories is not None:
        with open(out / "trajectories.csv", "w", newline="") as fh:
            fh.write("run,step,value\n")
            for run, step, value in draws.trajectories:
                fh.write(f"{int(run)},{int(step)},{_format_float(value)}\n")
    return draws_path


def _add_common(parser, with_data=True):
    if with_data:
        parser.add_argument("data", help="CSV file with the observed sample")
    parser.add_argument("--n-forward", type=int, default=1000, metavar="N",
                        help="total horizon N, observed sample included (default 1000)")
    parser.add_argument("--runs", type=int, default=100, metavar="R",
                        help="number of posterior draws (default 100)")
    parser.add_argument("--seed", type=int, default=0, metavar="S",
                        help="master seed; run r uses stream (seed, r)")
    parser.add_argument("--out", default="predres-out", metavar="DIR",
                        help="output directory (default ./predres-out)")
    parser.add_argument("--trajectories", action="store_true",
                        help="record trajectory checkpoints to trajectories.csv")
    parser.add_argument("--trajectory-stride", type=int, default=None, metavar="K",
                        help="checkpoint every K steps (default: ~50 checkpoints)")
    parser.add_argument("--skip-failed", action="store_true",
                        help="tolerate up to 1%% numerically failed runs")
    parser.add_argument("--threads", type=int, default=1, metavar="T",
                        help="worker processes for independent runs (default 1)")
    parser.add_argument("--header", action="store_true",
                        help="first CSV row is a header")
    parser.add_argument("--columns", default=None, metavar="SPEC",
                        help="comma-separated column names or 1-based indices")


def _add_model(parser, default="B"):
    parser.add_argument("--model", choices=["A", "B"], default=default,
                        help=f"correlation recursion variant (default {default})")


def _add_transform(parser):
    parser.add_argument("--transform", default="auto", metavar="SPEC",
                        help="auto | identity | logit | affine:lo:hi (default auto)")


def _add_statistic(parser, default):
    parser.add_argument("--statistic", default=default, metavar="SPEC",
                        help="mean | variance | quantile:q | beta-moments | correlation"
                             f" (default {default})")


def _add_jitter(parser):
    parser.add_argument("--jitter-ties", action="store_true",
                        help="break tied values with a deterministic 1e-12 jitter")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="predres",
        description="Posterior draws by forward-simulating one-step-ahead predictives.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("iid", help="continuous predictive resampling of one column")
    _add_common(p)
    _add_transform(p)
    _add_statistic(p, "mean")
    _add_jitter(p)

    p = sub.add_parser("urn", help="Polya-urn (Bayesian bootstrap) resampling")
    _add_common(p)
    _add_statistic(p, "mean")

    p = sub.add_parser("normal-check", help="closed-form normal location baseline")
    _add_common(p)

    p = sub.add_parser("bivariate", help="two margins coupled by the score recursion")
    _add_common(p)
    _add_model(p, "B")
    _add_transform(p)
    _add_statistic(p, "correlation")
    _add_jitter(p)

    p = sub.add_parser("multivariate", help="d margins coupled by the matrix recursion")
    _add_common(p)
    _add_model(p, "A")
    _add_transform(p)
    _add_statistic(p, "correlation")
    _add_jitter(p)
    p.add_argument("--dims", type=int, default=None,
                   help="expected number of columns (validated against the file)")

    p = sub.add_parser("regression", help="linear model, response in the first column")
    _add_common(p)
    _add_jitter(p)

    p = sub.add_parser("selftest", help="run built-in closed-form checks, no input files")
    p.add_argument("--seed", type=int, default=0)

    return parser


_COMMAND_SCHEME = {
    "iid": "hill-iid",
    "urn": "urn-iid",
    "normal-check": "normal-analytic",
    "bivariate": "bivariate",
    "multivariate": "multivariate",
    "regression": "regression",
}


def _build_config(args, scheme, n_observed, statistic):
    stride = None
    if args.trajectories:
        if args.trajectory_stride is not None:
            stride = args.trajectory_stride
        else:
            stride = max(1, (args.n_forward - n_observed) // 50)
    return engine.RunConfig(
        n_observed=n_observed,
        horizon_n=args.n_forward,
        runs=args.runs,
        master_seed=args.seed,
        scheme=scheme,
        variant=getattr(args, "model", "B"),
        transform=parse_transform(getattr(args, "transform", "auto")),
        statistic=statistic,
        record_trajectory_every=stride,
        jitter_ties=getattr(args, "jitter_ties", False),
        skip_failed=args.skip_failed,
        threads=args.threads,
    )


def _statistic_text(args, scheme):
    if scheme == "normal-analytic":
        return "mean"
    if scheme == "regression":
        return "ols-coefficients"
    return args.statistic


def _config_echo(args, config):
    echo = {
        "command": args.command,
        "data": getattr(args, "data", None),
        "header": getattr(args, "header", False),
        "columns": getattr(args, "columns", None),
        "n_forward": config.horizon_n,
        "runs": config.runs,
        "seed": config.master_seed,
        "model": config.variant,
        "transform": getattr(args, "transform", None),
        "statistic": getattr(args, "statistic", None) or config.statistic.kind,
        "trajectories": config.record_trajectory_every is not None,
        "trajectory_stride": config.record_trajectory_every,
        "jitter_ties": config.jitter_ties,
        "skip_failed": config.skip_failed,
        "threads": config.threads,
        "n_observed": config.n_observed,
        "scheme": config.scheme,
    }
    return echo


def _run_experiment(args):
    scheme = _COMMAND_SCHEME[args.command]
    matrix, _names = read_csv(args.data, has_header=args.header, columns=args.columns)
    n, width = matrix.shape

    expected = {"hill-iid": 1, "urn-iid": 1, "normal-analytic": 1, "bivariate": 2}
    if scheme in expected and width != expected[scheme]:
        raise ParseError(
            f"{args.command} needs exactly {expected[scheme]} column(s), file has {width}"
        )
    if scheme == "multivariate":
        if width < 2:
            raise ParseError(f"multivariate needs at least 2 columns, file has {width}")
        if args.dims is not None and args.dims != width:
            raise ParseError(f"--dims {args.dims} but file has {width} columns")
    if scheme == "regression" and width < 2:
        raise ParseError(f"regression needs a response plus covariates, file has {width}")

    statistic = engine.parse_statistic(_statistic_text(args, scheme))
    config = _build_config(args, scheme, n, statistic)

    if scheme in ("hill-iid", "urn-iid"):
        draws = engine.run_iid(config, matrix[:, 0])
    elif scheme == "normal-analytic":
        draws = engine.run_normal_analytic(config, matrix[:, 0])
    elif scheme == "bivariate":
        draws = engine.run_bivariate(config, matrix[:, 0], matrix[:, 1])
    elif scheme == "multivariate":
        draws = engine.run_multivariate(config, matrix)
    else:
        draws = engine.run_regression(config, matrix[:, 0], matrix[:, 1:])

    summary = {"config": _config_echo(args, config), "summary": engine.summarize(draws)}
    draws_path = write_outputs(draws, summary, args.out)
    n_failed = len(draws.diagnostics.get("failed_runs", []))
    print(
        f"wrote {draws_path} ({draws.draws.shape[0]} runs x {len(draws.columns)} columns"
        + (f", {n_failed} failed runs skipped" if n_failed else "")
        + ")"
    )
    return 0


def _selftest_interval_uniformity(seed):
    """Each of the n+1 inter-order-statistic intervals receives ~1/(n+1)."""
    n, draws = 20, 20_000
    data_stream = RngStream(seed, 10_000)
    state = hill_init(sorted(data_stream.uniforms(n)))
    edges = np.concatenate([[0.0], state.values, [1.0]])
    stream = RngStream(seed, 0)
    hits = np.zeros(n + 1, dtype=int)
    for _ in range(draws):
        x = sample_next(state, stream)
        hits[np.searchsorted(edges, x) - 1] += 1
    target = 1.0 / (n + 1)
    tol = 3.0 * math.sqrt(target * (1.0 - target) / draws)
    worst = float(np.max(np.abs(hits / draws - target)))
    return worst <= tol, f"max interval deviation {worst:.2e} (tol {tol:.2e})"


def _selftest_normal_analytic(seed):
    """Simulated forward draws match the closed-form normal law."""
    n, horizon, runs = 50, 500, 2000
    data = RngStream(seed, 10_001).standard_normals(n)
    config = engine.RunConfig(
        n_observed=n, horizon_n=horizon, runs=runs, master_seed=seed,
        scheme="normal-analytic",
    )
    draws = engine.run_normal_analytic(config, data)
    sample_var = float(np.var(draws.draws[:, 0], ddof=1))
    target = draws.diagnostics["analytic_variance"]
    rel = abs(sample_var - target) / target
    mean_err = abs(float(np.mean(draws.draws[:, 0])) - draws.diagnostics["analytic_mean"])
    mean_tol = 3.0 * math.sqrt(target / runs)
    ok = rel <= 0.10 and mean_err <= mean_tol
    return ok, f"variance rel err {rel:.3f} (tol 0.10), mean err {mean_err:.3f} (tol {mean_tol:.3f})"


def _run_selftest(args):
    checks = [
        ("interval-uniformity", _selftest_interval_uniformity),
        ("normal-analytic", _selftest_normal_analytic),
    ]
    failures = 0
    for name, fn in checks:
        ok, detail = fn(args.seed)
        print(f"selftest {name}: {'pass' if ok else 'FAIL'} ({detail})")
        failures += 0 if ok else 1
    return 1 if failures else 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "selftest":
            return _run_selftest(args)
        return _run_experiment(args)
    except PredresError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
