"""Command-line entry point.

Usage::

    unlearn-lab <experiment> --config <path> [--out <path>]
                [--seeds s1,s2,...] [--tolerance x]

Exit status: 0 when every check passed, 1 on numerical failures or
failed checks, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, UnlearnLabError
from .experiments import (
    EXPERIMENTS,
    exit_code_for,
    load_config,
    run_experiment,
    write_outputs,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unlearn-lab",
        description="Deterministic experiments on fine-tuning-based unlearning.",
    )
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True, help="JSON experiment configuration")
    parser.add_argument("--out", default=None, help="CSV output path (default: <experiment>.csv)")
    parser.add_argument(
        "--seeds", default=None,
        help="comma-separated seed list overriding the config",
    )
    parser.add_argument(
        "--tolerance", type=float, default=None,
        help="override both the relative tolerance and the absolute floor",
    )
    return parser


def _parse_seeds(raw: str) -> list[int]:
    try:
        seeds = [int(part) for part in raw.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"--seeds must be comma-separated integers, got {raw!r}") from exc
    if not seeds:
        raise ConfigError("--seeds must name at least one seed")
    return seeds


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.experiment)
        if args.seeds is not None:
            cfg["seeds"] = _parse_seeds(args.seeds)
        if args.tolerance is not None:
            if args.tolerance < 0:
                raise ConfigError("--tolerance must be nonnegative")
            cfg["tolerance"] = {"rel": args.tolerance, "abs_floor": args.tolerance}
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        result = run_experiment(args.experiment, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except UnlearnLabError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1

    out = args.out or cfg.get("out") or f"{args.experiment}.csv"
    csv_path = write_outputs(result, out)
    status = exit_code_for(result)
    verdict = {0: "ok", 1: "FAILED"}[status]
    passed = "n/a" if result.passed is None else str(result.passed).lower()
    print(
        f"{args.experiment}: {len(result.rows)} rows -> {csv_path} "
        f"(passed={passed}, numerical_failures={result.numerical_failures}, {verdict})"
    )
    return status


if __name__ == "__main__":
    sys.exit(main())
