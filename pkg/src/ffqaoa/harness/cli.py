"""Command line entry point: ``ffqaoa <kind> [--config FILE] [--override key=value ...]``.

Exit codes: 0 success, 1 configuration error, 2 numerical fault (or failed
verification), 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

import numpy as np
from pydantic import ValidationError

from ..nambu import NambuError
from .config import KINDS, ConfigError, build_config, load_config
from .runner import run_experiment

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("threads must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ffqaoa", description="Free-fermion QAOA experiments on Ising rings.")
    sub = parser.add_subparsers(dest="kind", required=True, metavar="KIND")
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} experiment")
        p.add_argument("--config", help="TOML experiment file; its kind must match the subcommand")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--seed", type=_u64, help="master 64-bit seed")
        p.add_argument("--threads", type=_positive, help="worker threads for independent restarts")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE", help="dotted key set to a TOML literal")
        p.add_argument("--quiet", action="store_true", help="do not print the summary")
    return parser


def _load(args: argparse.Namespace):
    top = {"seed": args.seed, "threads": args.threads, "output_dir": args.out}
    if args.config is None:
        return build_config({"kind": args.kind}, args.override, **top), None
    cfg, raw = load_config(args.config, args.override, **top)
    if cfg.kind != args.kind:
        raise ConfigError(f"config kind {cfg.kind!r} does not match subcommand {args.kind!r}")
    return cfg, raw


def _verify_failed(summary: dict) -> bool:
    return summary.get("failed", 0) > 0


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, raw = _load(args)
    except (ConfigError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        bundle = run_experiment(cfg, source=raw)
    except (ConfigError, ValidationError, NambuError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical fault in {cfg.kind} (seed {cfg.seed}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    if not args.quiet:
        print(json.dumps(bundle.summary, indent=2, sort_keys=True))
        print(f"results written to {bundle.directory}", file=sys.stderr)
    if cfg.kind == "verify" and _verify_failed(bundle.summary):
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
