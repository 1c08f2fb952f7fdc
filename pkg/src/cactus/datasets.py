"""Materialise the evaluation datasets as CSV files the pipeline can ingest.

The breast cancer data ships with scikit-learn, so it can be produced
offline. The Thyroid0387 raw file has to be downloaded once (see
``scripts/fetch_data.py``); this module prepares it by recoding the
diagnosis string into the healthy / hyperthyroid / hypothyroid classes.
"""
from __future__ import annotations

import csv
import re
from pathlib import Path

from .ingest import recode_thyroid_diagnosis

# Canonical attribute names for the 30 breast-cancer features: measured value,
# its standard error, and the worst value per base quantity.
_WDBC_BASES = [
    "Radius", "Texture", "Perimeter", "Area", "Smoothness", "Compactness",
    "Concavity", "Concave points", "Symmetry", "Fractal dimension",
]
WDBC_FEATURES = (
    _WDBC_BASES
    + [f"{base} SE" for base in _WDBC_BASES]
    + [f"Worst {base[0].lower()}{base[1:]}" for base in _WDBC_BASES]
)

# Thyroid0387 column order (29 attributes plus the diagnosis string).
THYROID_COLUMNS = [
    "Age", "Sex", "On_thyroxine", "Query_on_thyroxine", "On_antithyroid_medication",
    "Sick", "Pregnant", "Thyroid_surgery", "I131_treatment", "Query_hypothyroid",
    "Query_hyperthyroid", "Lithium", "Goitre", "Tumor", "Hypopituitary", "Psych",
    "TSH_measured", "TSH", "T3_measured", "T3", "TT4_measured", "TT4",
    "T4U_measured", "T4U", "FTI_measured", "FTI", "TBG_measured", "TBG",
    "Referral_source", "Diagnosis",
]

THYROID_URL = (
    "https://archive.ics.uci.edu/ml/machine-learning-databases/"
    "thyroid-disease/thyroid0387.data"
)

_RECORD_ID = re.compile(r"\[.*\]\s*$")


def materialize_wdbc(path: Path | str) -> Path:
    """Write the breast cancer table: Diagnosis (B/M) plus 30 features."""
    from sklearn.datasets import load_breast_cancer

    bundle = load_breast_cancer()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["Diagnosis"] + WDBC_FEATURES)
        for row, target in zip(bundle.data, bundle.target):
            # scikit-learn codes malignant as 0; the CSV keeps the original
            # B/M tokens so ingestion exercises value replacement.
            diagnosis = "B" if target == 1 else "M"
            writer.writerow([diagnosis] + [repr(float(v)) for v in row])
    return path


def prepare_thyroid_csv(raw_path: Path | str, out_path: Path | str) -> Path:
    """Convert the raw Thyroid0387 file into a labelled CSV.

    The diagnosis field (letters plus a bracketed record id) is recoded to
    0/1/2; records outside the considered conditions keep an empty label and
    are dropped during ingestion.
    """
    raw_path = Path(raw_path)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(raw_path, encoding="utf-8") as source, open(
        out_path, "w", newline="", encoding="utf-8"
    ) as sink:
        writer = csv.writer(sink)
        writer.writerow(THYROID_COLUMNS)
        for line in source:
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != len(THYROID_COLUMNS):
                raise ValueError(
                    f"expected {len(THYROID_COLUMNS)} fields, got {len(fields)}: {line!r}"
                )
            diagnosis = _RECORD_ID.sub("", fields[-1]).strip()
            code = recode_thyroid_diagnosis(diagnosis)
            fields[-1] = "" if code is None else str(code)
            writer.writerow(fields)
    return out_path


def fetch_thyroid_raw(dest: Path | str, url: str = THYROID_URL) -> Path:
    """Download the raw Thyroid0387 file (network required)."""
    from urllib.request import urlopen

    dest = Path(dest)
    dest.parent.mkdir(parents=True, exist_ok=True)
    with urlopen(url, timeout=60) as response:
        dest.write_bytes(response.read())
    return dest
