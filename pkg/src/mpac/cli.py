"""Command-line entry point: run the solver on a dataset directory, generate
synthetic benchmarks, and sweep hyperparameter grids.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import metrics as metrics_mod
from .dataset import load_dataset, normalize_views, save_dataset, synth_multiview
from .errors import (
    InvalidDataError,
    InvalidInputError,
    NotFoundError,
    NumericalError,
    ParseError,
    ShapeMismatchError,
)
from .solver import MpacConfig, grid_sweep, run

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    """argparse maps usage errors to exit code 2 by default; we use 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--clusters", type=int, required=True, help="number of clusters")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init", choices=["random", "spectral"], default="spectral")
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--header", action="store_true", help="view CSVs have a header line")
    p.add_argument(
        "--no-normalize",
        action="store_true",
        help="skip the per-feature [-1,1] rescaling",
    )


def _build_parser() -> _Parser:
    parser = _Parser(prog="mpac", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="cluster a dataset directory")
    _add_solver_args(p_run)
    p_run.add_argument("--out", help="write the run report JSON here (default stdout)")
    p_run.add_argument("--labels-out", help="write predicted labels as CSV")
    p_run.add_argument(
        "--dump-graphs",
        metavar="DIR",
        help="write each view's affinity matrix as CSV per outer iteration",
    )
    p_run.add_argument(
        "--sweep-log",
        metavar="FILE",
        help="stream per-sweep diagnostics as JSON lines",
    )
    p_run.set_defaults(func=cmd_run)

    p_synth = sub.add_parser("synth", help="generate a synthetic dataset")
    p_synth.add_argument("--n-per-cluster", type=int, default=50)
    p_synth.add_argument("--clusters", type=int, default=3)
    p_synth.add_argument("--views", type=int, default=2)
    p_synth.add_argument("--noise", type=float, default=0.1)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.set_defaults(func=cmd_synth)

    p_sweep = sub.add_parser("sweep", help="grid-sweep alpha/beta/gamma")
    _add_solver_args(p_sweep)
    p_sweep.add_argument("--alpha-grid", default=None, help="comma list, e.g. 0.1,1,10")
    p_sweep.add_argument("--beta-grid", default=None)
    p_sweep.add_argument("--gamma-grid", default=None)
    p_sweep.add_argument("--out", required=True, help="output CSV table")
    p_sweep.set_defaults(func=cmd_sweep)

    return parser


def _usage_fail(message: str) -> int:
    print(f"mpac: error: {message}", file=sys.stderr)
    return EXIT_USAGE


def _make_config(args) -> MpacConfig:
    return MpacConfig(
        c=args.clusters,
        alpha=args.alpha,
        beta=args.beta,
        gamma=args.gamma,
        max_outer_iters=args.max_iter,
        rel_obj_tol=args.tol,
        seed=args.seed,
        init=args.init,
    )


def _load_for_solver(args):
    ds = load_dataset(args.data, header=args.header)
    if not args.no_normalize:
        ds = normalize_views(ds)
    return ds


def cmd_run(args) -> int:
    if args.clusters < 2:
        return _usage_fail("--clusters must be at least 2")
    ds = _load_for_solver(args)
    cfg = _make_config(args)

    sweep_callback = None
    if args.dump_graphs:
        dump_dir = Path(args.dump_graphs)
        dump_dir.mkdir(parents=True, exist_ok=True)

        def sweep_callback(state, sweep):
            for i, vs in enumerate(state.views):
                np.savetxt(
                    dump_dir / f"sweep_{sweep:03d}_view_{i}.csv",
                    vs.graph.w_sym,
                    delimiter=",",
                    fmt="%.17g",
                )

    start = time.perf_counter()
    result = run(
        ds,
        cfg,
        trace_file=args.sweep_log,
        sweep_callback=sweep_callback,
    )
    wall = time.perf_counter() - start

    report = {
        "config": {
            "data": str(args.data),
            "clusters": cfg.c,
            "alpha": cfg.alpha,
            "beta": cfg.beta,
            "gamma": cfg.gamma,
            "seed": cfg.seed,
            "init": cfg.init,
            "max_iter": cfg.max_outer_iters,
            "tol": cfg.rel_obj_tol,
            "normalize": not args.no_normalize,
            "header": bool(args.header),
        },
        "labels": result.labels.tolist(),
        "weights": result.w.tolist(),
        "iterations": result.iterations_run,
        "converged": result.converged,
        "objective_trace": [asdict(t) for t in result.objective_trace],
        "connectivity": [
            {"view": i, "near_zero": count, "eigenvalues": vals.tolist()}
            for i, (count, vals) in enumerate(result.connectivity)
        ],
        "wall_seconds": wall,
    }
    if ds.labels is not None:
        report["metrics"] = metrics_mod.score(ds.labels, result.labels).as_dict()

    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    if args.labels_out:
        np.savetxt(args.labels_out, result.labels, fmt="%d")
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.clusters < 2:
        return _usage_fail("--clusters must be at least 2")
    if args.views < 1:
        return _usage_fail("--views must be at least 1")
    if args.n_per_cluster < 1:
        return _usage_fail("--n-per-cluster must be at least 1")
    if args.noise < 0:
        return _usage_fail("--noise must be nonnegative")
    ds = synth_multiview(
        n_per_cluster=args.n_per_cluster,
        c=args.clusters,
        v=args.views,
        noise=args.noise,
        seed=args.seed,
    )
    save_dataset(ds, args.out)
    return EXIT_OK


def _parse_grid(text: str | None, fallback: float) -> list[float]:
    if text is None:
        return [fallback]
    values = [float(tok) for tok in text.split(",") if tok.strip()]
    if not values:
        raise ValueError("empty grid")
    return values


def cmd_sweep(args) -> int:
    if args.clusters < 2:
        return _usage_fail("--clusters must be at least 2")
    try:
        alphas = _parse_grid(args.alpha_grid, args.alpha)
        betas = _parse_grid(args.beta_grid, args.beta)
        gammas = _parse_grid(args.gamma_grid, args.gamma)
    except ValueError as exc:
        return _usage_fail(f"bad grid: {exc}")

    ds = _load_for_solver(args)
    rows = grid_sweep(ds, _make_config(args), alphas, betas, gammas)

    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["alpha", "beta", "gamma", "ari", "nmi", "f_score",
             "objective", "iterations", "status"]
        )
        for row in rows:
            m = row["metrics"]
            writer.writerow([
                row["alpha"],
                row["beta"],
                row["gamma"],
                "" if m is None else m.ari,
                "" if m is None else m.nmi,
                "" if m is None else m.f_score,
                "" if row["objective"] is None else row["objective"],
                "" if row["iterations"] is None else row["iterations"],
                row["status"],
            ])

    any_ok = any(row["status"] == "ok" for row in rows)
    return EXIT_OK if any_ok else EXIT_NUMERIC


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    try:
        return args.func(args)
    except (NotFoundError, ShapeMismatchError, ParseError, InvalidDataError) as exc:
        print(f"mpac: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"mpac: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InvalidInputError as exc:
        print(f"mpac: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
