"""Command-line entry point: ``sobolev-action run <suite>`` and friends.

Exit status is 0 when every check passes, 1 when a check fails and 2 for
configuration or output errors (no report files are written in that case).
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from .errors import ConfigurationError
from .harness import (
    ENV_OUT,
    ENV_THREADS,
    SUITES,
    ExperimentConfig,
    check_writable,
    default_config_text,
    emit_report,
    load_config,
    run_suite,
)

log = logging.getLogger("sobolev_action")


def _grid_list(text):
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N[,N...], got {text!r}") from None


def _seed(text):
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sobolev-action",
        description="Run verification suites for reparametrization actions on Sobolev spaces.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one suite and write <suite>.csv and <suite>.json")
    run.add_argument("suite", help="suite name (see list-suites)")
    run.add_argument("--config", metavar="PATH", help="key = value configuration file")
    run.add_argument("--seed", type=_seed, help="master seed (unsigned 64-bit)")
    run.add_argument("--out", metavar="DIR", help=f"output directory (env {ENV_OUT})")
    run.add_argument("--grid", type=_grid_list, metavar="N[,N...]",
                     help="torus grid sizes; replaces both grids and sweep_grids")
    run.add_argument("--threads", type=int, metavar="K", help=f"worker threads (env {ENV_THREADS})")
    run.add_argument("--plot-script", action="store_true",
                     help="also write <suite>_plot.py next to the CSV")

    sub.add_parser("list-suites", help="print the available suites")
    sub.add_parser("print-default-config", help="print the default configuration")
    return parser


def resolve_config(args) -> ExperimentConfig:
    """Defaults < config file < environment < command-line flags."""
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if os.environ.get(ENV_OUT):
        cfg.out = os.environ[ENV_OUT]
    if os.environ.get(ENV_THREADS):
        try:
            cfg.threads = int(os.environ[ENV_THREADS])
        except ValueError:
            raise ConfigurationError(f"{ENV_THREADS} must be an integer") from None
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    if args.grid:
        cfg.grids = list(args.grid)
        cfg.sweep_grids = list(args.grid)
    if args.threads is not None:
        cfg.threads = args.threads
    if cfg.suite and cfg.suite != args.suite:
        raise ConfigurationError(f"config names suite {cfg.suite!r} but {args.suite!r} was requested")
    cfg.suite = args.suite
    return cfg.validate()


def _cmd_run(args) -> int:
    try:
        cfg = resolve_config(args)
        check_writable(cfg.out)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    log.info("running %s with seed %d", cfg.suite, cfg.seed)
    try:
        rows = run_suite(cfg)
        paths = emit_report(rows, cfg, plot_script=args.plot_script)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"error: suite aborted: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    failed = [r for r in rows if r.passed is False]
    checks = sum(r.passed is not None for r in rows)
    print(f"{cfg.suite}: {checks - len(failed)}/{checks} checks passed; wrote "
          + ", ".join(str(p) for p in paths))
    for r in failed:
        print(f"  FAIL {r.cell} {r.metric} = {r.value:.4g} (threshold {r.threshold})")
    return 1 if failed else 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "list-suites":
        for name, (_, doc) in SUITES.items():
            print(f"{name:22s}{doc}")
        return 0
    if args.command == "print-default-config":
        sys.stdout.write(default_config_text())
        return 0
    return _cmd_run(args)


if __name__ == "__main__":
    raise SystemExit(main())
