"""Command-line entry point.

Usage: blochspec <task> --config <path> [--no-cache] [--threads N] [--out DIR]

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 partial
success.  The cache directory defaults to <output dir>/.blochspec-cache and
can be overridden with the BLOCHSPEC_CACHE_DIR environment variable.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .config import TASK_KINDS, parse_config
from .errors import ConfigError
from .runner import EXIT_CONFIG, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blochspec",
        description="Spectra of periodic-coefficient ODE operators: Hill matrices, "
                    "determinant Evans functions, winding-number root counts.",
    )
    parser.add_argument("task", choices=TASK_KINDS, help="task to run (must match the config)")
    parser.add_argument("--config", required=True, help="path to the YAML run configuration")
    parser.add_argument("--no-cache", action="store_true", help="bypass the result cache")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    parser.add_argument("--out", default=None, help="override the output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = parse_config(args.config)
        if config.task != args.task:
            raise ConfigError(
                f"config declares task {config.task!r} but {args.task!r} was requested"
            )
        if args.out is not None:
            config = dataclasses.replace(config, output_dir=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    outcome = run(config, use_cache=not args.no_cache, threads=max(1, args.threads))
    for msg in outcome.messages:
        print(msg, file=sys.stderr)
    for path in outcome.files:
        print(path)
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
