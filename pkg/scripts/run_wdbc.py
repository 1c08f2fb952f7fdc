#!/usr/bin/env python3
"""Run the full pipeline on the breast cancer data set and print a summary."""
from __future__ import annotations

import logging
import sys
from pathlib import Path

from cactus.config import load_config
from cactus.datasets import materialize_wdbc
from cactus.pipeline import run

REPO_ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    data = REPO_ROOT / "data" / "wdbc.csv"
    if not data.exists():
        materialize_wdbc(data)
    config = load_config(REPO_ROOT / "configs" / "wdbc.yaml")
    manifest = run(config)
    for record in manifest.configurations:
        print(f"{record.binarisation}/{record.stratum}: {record.status}")
        for name, value in sorted(record.metrics.items()):
            print(f"  {name}: {value:.4f}")
    print(f"outputs in {config.output_dir}")
    return 0 if manifest.ok else 1


if __name__ == "__main__":
    sys.exit(main())
