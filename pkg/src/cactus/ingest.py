"""CSV ingestion: cleaning, label recoding, binarisation, stratification."""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import pandas as pd

from .config import RunConfig
from .errors import DataError

logger = logging.getLogger(__name__)

MAX_STRATIFICATION_VALUES = 10


@dataclass(frozen=True)
class Provenance:
    """Identifies which (binarisation, stratum) slice a table belongs to."""

    binarisation: str = "original"
    stratum: str = "all"


@dataclass
class DataTable:
    """Cleaned tabular data: numeric or token feature columns plus labels.

    Numeric columns use NaN for missing cells; token columns hold raw strings
    with NaN for missing. The index of ``features`` carries the original CSV
    row numbers, so strata can be traced back to their source rows.
    """

    features: pd.DataFrame
    labels: np.ndarray
    n_classes: int
    label_name: str
    provenance: Provenance = Provenance()

    def __post_init__(self) -> None:
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.labels) != len(self.features):
            raise DataError("labels and features must have the same number of rows")
        if len(self.labels) == 0:
            raise DataError("table is empty after cleaning")
        present = np.unique(self.labels)
        if self.n_classes < 2:
            raise DataError(f"need at least 2 classes, got {self.n_classes}")
        if present[0] < 0 or present[-1] >= self.n_classes:
            raise DataError("class indices out of range")
        if len(present) != self.n_classes:
            missing = sorted(set(range(self.n_classes)) - set(present.tolist()))
            raise DataError(f"classes {missing} are empty; class indices must be dense")

    @property
    def n_rows(self) -> int:
        return len(self.features)

    @property
    def feature_names(self) -> list[str]:
        return list(self.features.columns)

    @property
    def row_ids(self) -> np.ndarray:
        return self.features.index.to_numpy()

    def is_numeric(self, column: str) -> bool:
        return pd.api.types.is_float_dtype(self.features[column])

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def numeric_codes(self) -> pd.DataFrame:
        """Features with token columns replaced by their sorted-unique codes."""
        out = {}
        for col in self.features.columns:
            series = self.features[col]
            if self.is_numeric(col):
                out[col] = series.astype(float)
            else:
                tokens = sorted(series.dropna().unique())
                mapping = {tok: float(i) for i, tok in enumerate(tokens)}
                out[col] = series.map(mapping).astype(float)
        return pd.DataFrame(out, index=self.features.index)

    def to_csv(self, path: Path | str) -> None:
        """Canonical on-disk form: label column first, then the features."""
        frame = self.features.copy()
        frame.insert(0, self.label_name, self.labels)
        frame.to_csv(path, index_label="row_id")


def load_table(config: RunConfig) -> DataTable:
    """Load and clean the configured CSV into an analysis-ready table.

    Cleaning order: drop columns, replace NaN tokens with missing, apply the
    per-column value replacements, then infer column types (a column is
    numeric iff every observed cell parses as a number). Rows without a label
    are dropped and class indices are re-packed to 0..K-1.
    """
    try:
        raw = pd.read_csv(config.input_path, dtype=str, keep_default_na=False)
    except FileNotFoundError as exc:
        raise DataError(f"input file not found: {config.input_path}") from exc
    except pd.errors.ParserError as exc:
        raise DataError(f"cannot parse {config.input_path}: {exc}") from exc

    if config.target_column not in raw.columns:
        raise DataError(
            f"target column {config.target_column!r} not present in {config.input_path}"
        )
    for col in config.dropped_columns:
        if col not in raw.columns:
            raise DataError(f"dropped column {col!r} not present in the input")
    raw = raw.drop(columns=list(config.dropped_columns))

    nan_tokens = set(config.nan_tokens) | {""}
    cleaned: dict[str, pd.Series] = {}
    for col in raw.columns:
        series = raw[col].copy()
        series[series.isin(nan_tokens)] = np.nan
        mapping = config.value_replacements.get(col)
        if mapping:
            series = series.map(lambda v: mapping.get(v, v) if isinstance(v, str) else v)
        cleaned[col] = series

    target = cleaned.pop(config.target_column)
    keep = target.notna()
    if not keep.any():
        raise DataError("table is empty after cleaning: no rows with a label")
    dropped_rows = int((~keep).sum())
    if dropped_rows:
        logger.info("dropped %d rows with a missing label", dropped_rows)

    label_values = pd.to_numeric(target[keep], errors="coerce")
    if label_values.isna().any():
        bad = target[keep][label_values.isna()].iloc[0]
        raise DataError(
            f"target column {config.target_column!r} has non-numeric value {bad!r}; "
            "map it with value_replacements"
        )
    if not np.all(np.mod(label_values.to_numpy(), 1) == 0):
        raise DataError(f"target column {config.target_column!r} must be integer-coded")
    label_ints = label_values.to_numpy().astype(np.int64)
    classes = np.unique(label_ints)
    index_of = {c: i for i, c in enumerate(classes.tolist())}
    labels = np.array([index_of[c] for c in label_ints], dtype=np.int64)

    features = pd.DataFrame(index=raw.index[keep])
    for col, series in cleaned.items():
        series = series[keep]
        observed = series.notna()
        numeric = pd.to_numeric(series[observed], errors="coerce")
        if observed.any() and not numeric.isna().any():
            full = pd.Series(np.nan, index=series.index, dtype=float)
            full[observed] = numeric.astype(float)
            features[col] = full
        else:
            features[col] = series.astype(object)

    table = DataTable(
        features=features,
        labels=labels,
        n_classes=len(classes),
        label_name=config.target_column,
    )
    for attribute in config.stratifications:
        _check_stratifiable(table, attribute)
    return table


# Thyroid diagnosis letters considered for classification: hyperthyroid
# conditions map to class 1, hypothyroid to class 2, concurrent non-thyroidal
# illness to class 0. Everything else is skipped.
_HYPERTHYROID = frozenset("ABCD")
_HYPOTHYROID = frozenset("EFGH")
_HEALTHY = frozenset("K")


def _diagnosis_code(token: str) -> int | None:
    if token in _HYPERTHYROID:
        return 1
    if token in _HYPOTHYROID:
        return 2
    if token in _HEALTHY:
        return 0
    return None


def recode_thyroid_diagnosis(raw: str) -> int | None:
    """Map a Thyroid0387 diagnosis string to a class index, or None to skip.

    A dual diagnosis "X|Y" reads as "consistent with X, but Y is more
    likely": Y wins when it is a considered letter, then X, otherwise the
    record is skipped.
    """
    text = raw.strip()
    if "|" in text:
        first, _, second = text.partition("|")
        code = _diagnosis_code(second.strip())
        if code is not None:
            return code
        return _diagnosis_code(first.strip())
    return _diagnosis_code(text)


def binarise_labels(table: DataTable, divider: int) -> DataTable:
    """Collapse labels to {0, 1}: class <= divider -> 0, otherwise 1."""
    if divider < 0 or divider >= table.n_classes:
        raise DataError(
            f"divider {divider} outside the class range 0..{table.n_classes - 1}"
        )
    new_labels = np.where(table.labels <= divider, 0, 1).astype(np.int64)
    if not (new_labels == 1).any():
        raise DataError(f"divider {divider} produces an empty class")
    return DataTable(
        features=table.features,
        labels=new_labels,
        n_classes=2,
        label_name=table.label_name,
        provenance=replace(table.provenance, binarisation=f"div{divider}"),
    )


def _check_stratifiable(table: DataTable, attribute: str) -> None:
    if attribute not in table.features.columns:
        raise DataError(f"stratification attribute {attribute!r} not found")
    if not table.is_numeric(attribute):
        raise DataError(f"stratification attribute {attribute!r} must be integer")
    values = table.features[attribute].dropna().to_numpy()
    if len(values) and not np.all(np.mod(values, 1) == 0):
        raise DataError(f"stratification attribute {attribute!r} must be integer")
    if len(np.unique(values)) >= MAX_STRATIFICATION_VALUES:
        raise DataError(
            f"stratification attribute {attribute!r} has "
            f">= {MAX_STRATIFICATION_VALUES} unique values"
        )


def stratify(table: DataTable, attribute: str) -> list[DataTable]:
    """Split into one table per value of ``attribute`` (column removed).

    Rows where the attribute is missing form their own stratum so that the
    strata always partition the input. Strata whose labels no longer cover
    the full class range are re-packed densely; single-class strata abort.
    """
    _check_stratifiable(table, attribute)
    column = table.features[attribute]
    values = sorted(set(column.dropna().tolist()))
    groups: list[tuple[str, pd.Series]] = [
        (f"{attribute}_{int(value)}", column == value) for value in values
    ]
    if column.isna().any():
        groups.append((f"{attribute}_missing", column.isna()))

    strata = []
    for stratum_id, mask in groups:
        sub_features = table.features.loc[mask].drop(columns=[attribute])
        sub_labels = table.labels[mask.to_numpy()]
        present = np.unique(sub_labels)
        if len(present) < 2:
            raise DataError(
                f"stratum {stratum_id!r} contains a single class; cannot analyse it"
            )
        if len(present) != table.n_classes:
            remap = {c: i for i, c in enumerate(present.tolist())}
            logger.warning(
                "stratum %s lost classes; re-packed labels %s", stratum_id, remap
            )
            sub_labels = np.array([remap[c] for c in sub_labels], dtype=np.int64)
        strata.append(
            DataTable(
                features=sub_features,
                labels=sub_labels,
                n_classes=len(present),
                label_name=table.label_name,
                provenance=replace(table.provenance, stratum=stratum_id),
            )
        )
    return strata
