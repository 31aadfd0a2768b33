"""Command-line entry point for the experiment runners.

Usage::

    lissim <conditioning|profile|truncation|spacing>
           [--config cfg.json] [--out table.csv]
           [--precision double|ext:<bits>] [--threshold 1e-9]
           [--quiet] [--no-timing] [--dump-matrices dir/]

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
Worker parallelism is capped by the ``LISSIM_MAX_WORKERS`` environment
variable.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, LisSimError
from .experiments import (
    EXPERIMENTS,
    apply_overrides,
    default_config,
    load_config,
    run_experiment,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lissim",
        description="Coupled-surface simulation sweeps; results are written as CSV.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name, help_text in (
        ("conditioning", "condition number of the coupling matrix vs element spacing"),
        ("profile", "eigenvalue profile of the coupling matrix"),
        ("truncation", "directivity and current cost vs truncation rank"),
        ("spacing", "fixed-aperture directivity sweep across precoding schemes"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="PATH",
                       help="JSON config file (built-in defaults when omitted)")
        p.add_argument("--out", metavar="PATH",
                       help="output CSV path (overrides the config)")
        p.add_argument("--precision", metavar="SPEC",
                       help="'double' or 'ext:<bits>' (overrides the config)")
        p.add_argument("--threshold", metavar="X", type=float,
                       help="eigenvalue truncation threshold (overrides the config)")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")
        p.add_argument("--no-timing", action="store_true",
                       help="omit the wall-time column (byte-comparable output)")
        p.add_argument("--dump-matrices", metavar="DIR",
                       help="also write each coupling matrix as plain text into DIR")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else default_config(args.experiment)
        cfg = apply_overrides(
            cfg,
            precision=args.precision,
            threshold=args.threshold,
            output_path=args.out,
            include_timing=False if args.no_timing else None,
            dump_dir=args.dump_matrices,
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if not args.quiet:
        print(
            f"running {args.experiment}: {len(cfg.spacings_m)} spacing(s), "
            f"kinds {[k.value for k in cfg.element_kinds]}, precision {cfg.precision.spec()}",
            file=sys.stderr,
        )
    try:
        result = run_experiment(args.experiment, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LisSimError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    result.write(cfg.output_path)
    if not args.quiet:
        print(f"wrote {len(result.rows)} rows to {cfg.output_path}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
