#!/usr/bin/env python3
"""Materialise the evaluation datasets under data/.

The breast cancer CSV comes from scikit-learn's bundled copy and works
offline. The Thyroid0387 file is downloaded from the UCI archive (one-time
network access) and recoded; pass --thyroid-raw to reuse an already
downloaded thyroid0387.data instead.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from cactus.datasets import (
    THYROID_URL,
    fetch_thyroid_raw,
    materialize_wdbc,
    prepare_thyroid_csv,
)

REPO_ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data-dir", type=Path, default=REPO_ROOT / "data")
    parser.add_argument(
        "--thyroid-raw", type=Path, default=None,
        help="existing thyroid0387.data file (skips the download)",
    )
    parser.add_argument("--skip-thyroid", action="store_true")
    args = parser.parse_args()

    wdbc_path = materialize_wdbc(args.data_dir / "wdbc.csv")
    print(f"wrote {wdbc_path}")

    if args.skip_thyroid:
        return 0
    raw = args.thyroid_raw
    if raw is None:
        raw = args.data_dir / "thyroid0387.data"
        if not raw.exists():
            try:
                fetch_thyroid_raw(raw)
                print(f"downloaded {raw}")
            except OSError as exc:
                print(
                    f"could not download {THYROID_URL}: {exc}\n"
                    "fetch thyroid0387.data manually and rerun with --thyroid-raw",
                    file=sys.stderr,
                )
                return 1
    out = prepare_thyroid_csv(raw, args.data_dir / "thyroid.csv")
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
