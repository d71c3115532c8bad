"""Command-line entry point.

Usage::

    sensebench run CONFIG.toml [--out DIR] [--threads K] [--seed S]
    sensebench validate CONFIG.toml

Exit status is 0 on success, 1 for configuration errors and 2 for runtime
failures. ``SENSEBENCH_OUT`` sets the default output directory.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from .config import ConfigError, load_config

ENV_OUT = "SENSEBENCH_OUT"
DEFAULT_OUT = "sensebench-out"

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sensebench", description="Noisy quantum sensing workbench")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment configuration")
    run.add_argument("config", help="path to a TOML experiment file")
    run.add_argument("--out", help=f"output directory (default: ${ENV_OUT} or ./{DEFAULT_OUT})")
    run.add_argument("--threads", type=int, default=1, help="worker processes (default 1)")
    run.add_argument("--seed", type=int, help="override the configured master seed")
    val = sub.add_parser("validate", help="check a configuration without running it")
    val.add_argument("config", help="path to a TOML experiment file")
    return parser


def resolve_out_dir(cli_out: str | None, cfg_out: str | None) -> str:
    return cli_out or cfg_out or os.environ.get(ENV_OUT) or DEFAULT_OUT


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "run":
            if args.threads < 1:
                raise ConfigError("--threads: must be >= 1")
            if args.seed is not None:
                if args.seed < 0:
                    raise ConfigError("--seed: must be >= 0")
                cfg = dataclasses.replace(cfg, seed=args.seed, raw={**cfg.raw, "seed": args.seed})
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate":
        print(f"{args.config}: ok ({cfg.experiment})")
        return EXIT_OK

    from .experiments import run_experiment

    out_dir = resolve_out_dir(args.out, cfg.output_dir)
    try:
        paths = run_experiment(cfg, out_dir, args.threads)
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
