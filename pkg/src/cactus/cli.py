"""Command line entry point: ``cactus run --config <yaml> [options]``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import load_config
from .errors import CactusError
from .pipeline import run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cactus",
        description="Abstraction-based explainable classification pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_parser = sub.add_parser(
        "run", help="run the full pipeline for every configured binarisation/stratum"
    )
    run_parser.add_argument("--config", required=True, type=Path, help="YAML run configuration")
    run_parser.add_argument("--out", type=Path, default=None, help="override output_dir")
    run_parser.add_argument("--jobs", type=int, default=1, help="parallel workers for graph builds")
    run_parser.add_argument(
        "--no-correlation", action="store_true", help="skip the correlation module"
    )
    run_parser.add_argument(
        "--no-preprocessing", action="store_true",
        help="skip the decision tree (correlation then uses all columns)",
    )
    run_parser.add_argument("-q", "--quiet", action="store_true", help="only log warnings")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(message)s",
    )
    try:
        config = load_config(args.config)
    except CactusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.out is not None:
        config.output_dir = args.out.resolve()

    manifest = run(
        config,
        jobs=args.jobs,
        with_correlation=not args.no_correlation,
        with_preprocessing=not args.no_preprocessing,
    )
    for record in manifest.configurations:
        line = f"{record.binarisation}/{record.stratum}: {record.status}"
        if record.metrics:
            line += (
                f"  balanced accuracy pagerank={record.metrics['balanced_accuracy_pagerank']:.4f}"
                f" probabilistic={record.metrics['balanced_accuracy_probabilistic']:.4f}"
            )
        if record.error:
            line += f"  ({record.error})"
        print(line)
    if manifest.error:
        print(f"error: {manifest.error}", file=sys.stderr)
    print(f"outputs in {config.output_dir}")
    return 0 if manifest.ok else 1


if __name__ == "__main__":
    sys.exit(main())
