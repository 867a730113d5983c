"""Command line entry point.

Without ``--sweep`` one trial is run and its report printed as JSON. With
``--sweep AXIS --values v1,v2,...`` the trials are averaged per value and a
table is written (CSV by default). Failures print a one-line JSON error
record on stderr and exit with status 1 (2 for bad arguments).
"""
from __future__ import annotations

import argparse
import json
import sys

from .config import SWEEP_AXES, ExperimentConfig, load_config
from .runner import run_trial, sweep
from .serialize import emit


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="irsthz", description="IRS-assisted THz link-level simulator")
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--seed", type=int, help="base seed (trial i uses seed + i)")
    p.add_argument("--trials", type=int, help="trials per sweep value")
    p.add_argument("--algos", help="comma-separated subset of gs,es,greedy,random")
    p.add_argument("--sweep", choices=SWEEP_AXES, help="axis to sweep")
    p.add_argument("--values", help="comma-separated, strictly ordered axis values")
    p.add_argument("--out", default="-", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), help="output format")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any configuration key (repeatable)")
    return p


def make_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip()] = v
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.algos is not None:
        overrides["algos"] = args.algos
    return cfg.overridden(**overrides)


def _error(kind: str, exc: Exception, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": str(exc)}) + "\n")
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = make_config(args)
        if args.sweep:
            if not args.values:
                raise UsageError("--sweep needs --values")
            values = [float(v) for v in args.values.split(",") if v.strip()]
            table = sweep(cfg, args.sweep, values)
            emit(table, args.format or "csv", args.out)
        else:
            if args.values:
                raise UsageError("--values needs --sweep")
            if args.format == "csv":
                raise UsageError("a single trial report is JSON only")
            emit(run_trial(cfg, cfg.seed), "json", args.out)
    except UsageError as exc:
        return _error("usage", exc, 2)
    except (ValueError, TypeError, OSError, RuntimeError) as exc:
        return _error(type(exc).__name__, exc, 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
