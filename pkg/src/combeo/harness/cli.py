"""Command line entry point.

    combeo run CONFIG [--seed S] [--outdir DIR] [--jobs K]
    combeo plot TRACE [TRACE ...] -o OUT.svg [--metric best_cost|mean_error] [--log]
    combeo bench list
    combeo validate CONFIG

Exit status: 0 on success, 1 when the config does not validate, 2 when
something fails at run time (including any single failed run).
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..benchmarks import describe
from .config import ConfigError, parse_config
from .io import ResultsWriteError, fmt, write_results
from .runner import run_experiment

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
log = logging.getLogger("combeo")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="combeo", description="Change-of-measure optimizers and benchmark runner.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config")
    run.add_argument("--seed", type=int, help="run every case once with this seed instead of the config's seeds")
    run.add_argument("--outdir", help="output directory (overrides the config)")
    run.add_argument("--jobs", type=int, default=1, help="parallel worker processes (default 1)")

    plot = sub.add_parser("plot", help="plot trace CSVs to an SVG file")
    plot.add_argument("traces", nargs="+")
    plot.add_argument("-o", "--output", required=True)
    plot.add_argument("--metric", choices=("best_cost", "mean_error"), default="best_cost")
    plot.add_argument("--log", action="store_true", help="logarithmic y axis")

    bench = sub.add_parser("bench", help="benchmark catalogue")
    bench.add_argument("action", choices=("list",))

    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("config")
    return p


def _load(path: str):
    try:
        return parse_config(path)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"error: {e}", file=sys.stderr)
        return None


def cmd_run(args) -> int:
    cfg = _load(args.config)
    if cfg is None:
        return EXIT_INVALID
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    if args.seed is not None:
        if args.seed < 0:
            print("error: --seed must be >= 0", file=sys.stderr)
            return EXIT_INVALID
        cfg = cfg.with_seed(args.seed)
    outdir = args.outdir or cfg.outdir or f"results/{cfg.name}"
    results, rows = run_experiment(cfg, jobs=args.jobs)
    try:
        write_results(cfg, results, rows, outdir)
    except ResultsWriteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for row in rows:
        print(f"{row.case_id}: reached {row.reached}/{row.runs}, median iterations {fmt(row.median_iterations)}, "
              f"median final error {row.median_final_error:.3g}")
    failed = [r for r in results if not r.ok]
    for r in failed:
        print(f"error: {r.spec.case_id} seed {r.spec.seed}: {r.error}", file=sys.stderr)
    print(f"wrote {outdir}")
    return EXIT_RUNTIME if failed else EXIT_OK


def cmd_plot(args) -> int:
    from .plotting import render_plot

    missing = [t for t in args.traces if not Path(t).is_file()]
    if missing:
        print(f"error: trace not found: {', '.join(missing)}", file=sys.stderr)
        return EXIT_INVALID
    try:
        out = render_plot(args.traces, args.output, metric=args.metric, log_scale=args.log)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if out is not None:
        print(f"wrote {out}")
    return EXIT_OK


def cmd_bench(args) -> int:
    print(f"{'id':<4} {'family':<10} box")
    for fid, family, half in describe():
        print(f"{fid:<4} {family:<10} [-{half:g}, {half:g}]")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _load(args.config)
    if cfg is None:
        return EXIT_INVALID
    print(f"ok: {len(cfg.cases)} cases, {len(cfg.runs)} runs")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": cmd_run, "plot": cmd_plot, "bench": cmd_bench, "validate": cmd_validate}[args.command]
    try:
        return handler(args)
    except Exception as exc:
        log.debug("unhandled error", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
