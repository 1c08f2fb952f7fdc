"""Attribute abstraction: Up/Down flips for continuous attributes via an
ROC-derived threshold, one flip per observed value for categorical ones."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError
from .ingest import DataTable, Provenance

CATEGORICAL_UNIQUE_LIMIT = 10

KIND_UP = "up"
KIND_DOWN = "down"
KIND_CATEGORICAL = "categorical"


@dataclass(frozen=True)
class Flip:
    attribute: str
    kind: str
    display_name: str
    value: str | None = None  # categorical token, None for up/down


@dataclass
class FlipSchema:
    """The abstraction vocabulary for one table."""

    attributes: list[str]
    flips: list[Flip]
    thresholds: dict[str, float]
    categorical_attributes: frozenset[str]
    flip_index: dict[str, int] = field(init=False)
    attribute_index: dict[str, int] = field(init=False)

    def __post_init__(self) -> None:
        self.flip_index = {f.display_name: i for i, f in enumerate(self.flips)}
        self.attribute_index = {a: i for i, a in enumerate(self.attributes)}

    @property
    def n_flips(self) -> int:
        return len(self.flips)

    def flips_of(self, attribute: str) -> list[Flip]:
        return [f for f in self.flips if f.attribute == attribute]

    def flip_attribute_indices(self) -> np.ndarray:
        """Attribute index of each flip, aligned with ``flips``."""
        return np.array([self.attribute_index[f.attribute] for f in self.flips])


@dataclass
class AbstractTable:
    """A table rewritten in flip space.

    ``active[r, f]`` marks flip ``f`` active in record ``r``; ``observed[r, a]``
    marks attribute ``a`` non-missing. Each record activates exactly one flip
    per observed attribute.
    """

    schema: FlipSchema
    active: np.ndarray
    observed: np.ndarray
    labels: np.ndarray
    n_classes: int
    row_ids: np.ndarray
    provenance: Provenance

    @property
    def n_rows(self) -> int:
        return self.active.shape[0]

    def record_flips(self, row: int) -> list[str]:
        return [
            self.schema.flips[i].display_name for i in np.flatnonzero(self.active[row])
        ]


def format_value(value: object) -> str:
    """Canonical token for a categorical value (integral floats drop the .0)."""
    if isinstance(value, float):
        if value.is_integer():
            return str(int(value))
        return repr(value)
    return str(value)


def choose_threshold(
    values: Sequence[tuple[float, int]], n_classes: int
) -> float:
    """Pick the cut between Up and Down flips for a continuous attribute.

    Candidates are midpoints between consecutive distinct values; the winner
    maximises the mean one-vs-rest Youden statistic |TPR - FPR| where
    "positive" means value > threshold. Ties go to the smallest candidate.
    """
    pairs = list(values)
    v = np.array([p[0] for p in pairs], dtype=float)
    y = np.array([p[1] for p in pairs], dtype=np.int64)
    distinct = np.unique(v)
    if len(distinct) < 2:
        raise DataError("cannot threshold an attribute with a single distinct value")
    candidates = (distinct[:-1] + distinct[1:]) / 2.0

    score = np.zeros(len(candidates))
    n_scored = 0
    for c in range(n_classes):
        pos = np.sort(v[y == c])
        neg = np.sort(v[y != c])
        if len(pos) == 0 or len(neg) == 0:
            continue
        tpr = 1.0 - np.searchsorted(pos, candidates, side="right") / len(pos)
        fpr = 1.0 - np.searchsorted(neg, candidates, side="right") / len(neg)
        score += np.abs(tpr - fpr)
        n_scored += 1
    if n_scored == 0:
        raise DataError("threshold search needs at least one non-empty class pair")
    # argmax returns the first (= smallest) candidate among exact ties
    return float(candidates[int(np.argmax(score))])


def infer_schema(table: DataTable, forced: Iterable[str] = ()) -> FlipSchema:
    """Assign each attribute a flip vocabulary and continuous thresholds.

    An attribute is categorical when it has fewer than
    ``CATEGORICAL_UNIQUE_LIMIT`` unique observed values or is listed in
    ``forced``; every other attribute must be numeric and gets an Up/Down
    pair around its ROC threshold.
    """
    forced = set(forced)
    unknown = forced - set(table.feature_names)
    if unknown:
        raise DataError(f"forced_categorical names unknown attributes: {sorted(unknown)}")

    flips: list[Flip] = []
    thresholds: dict[str, float] = {}
    categorical: set[str] = set()
    for attr in table.feature_names:
        series = table.features[attr]
        observed = series.dropna()
        if observed.empty:
            raise DataError(f"attribute {attr!r} has no observed values")
        unique_values = sorted(set(observed.tolist()))
        is_categorical = attr in forced or len(unique_values) < CATEGORICAL_UNIQUE_LIMIT
        if is_categorical:
            categorical.add(attr)
            for value in unique_values:
                token = format_value(value)
                flips.append(
                    Flip(attr, KIND_CATEGORICAL, f"{attr}_{token}", value=token)
                )
            continue
        if not table.is_numeric(attr):
            raise DataError(
                f"attribute {attr!r} is non-numeric with >= "
                f"{CATEGORICAL_UNIQUE_LIMIT} unique values; add it to forced_categorical"
            )
        mask = series.notna().to_numpy()
        pairs = list(zip(series.to_numpy(dtype=float)[mask], table.labels[mask]))
        thresholds[attr] = choose_threshold(pairs, table.n_classes)
        flips.append(Flip(attr, KIND_UP, f"{attr}_U"))
        flips.append(Flip(attr, KIND_DOWN, f"{attr}_D"))

    return FlipSchema(
        attributes=table.feature_names,
        flips=flips,
        thresholds=thresholds,
        categorical_attributes=frozenset(categorical),
    )


def abstract_table(
    table: DataTable, schema: FlipSchema, on_unseen: str = "error"
) -> AbstractTable:
    """Rewrite a table in flip space.

    Continuous cells flip Up when strictly above the threshold, Down
    otherwise; categorical cells activate their value's flip; missing cells
    activate nothing. A categorical value absent from the schema aborts
    unless ``on_unseen="skip"`` (then the cell counts as missing).
    """
    if on_unseen not in ("error", "skip"):
        raise ValueError(f"on_unseen must be 'error' or 'skip', got {on_unseen!r}")
    if schema.attributes != table.feature_names:
        raise DataError("schema does not cover this table's feature columns")

    n = table.n_rows
    active = np.zeros((n, schema.n_flips), dtype=bool)
    observed = np.zeros((n, len(schema.attributes)), dtype=bool)
    for a, attr in enumerate(schema.attributes):
        series = table.features[attr]
        obs = series.notna().to_numpy()
        if attr in schema.categorical_attributes:
            tokens = np.array(
                [format_value(v) if o else "" for v, o in zip(series.tolist(), obs)],
                dtype=object,
            )
            known = np.zeros(n, dtype=bool)
            for flip in schema.flips_of(attr):
                hit = obs & (tokens == flip.value)
                active[:, schema.flip_index[flip.display_name]] = hit
                known |= hit
            unseen = obs & ~known
            if unseen.any():
                if on_unseen == "error":
                    value = tokens[unseen][0]
                    raise DataError(
                        f"attribute {attr!r} has value {value!r} unseen at schema time"
                    )
                obs = known
        else:
            v = series.to_numpy(dtype=float)
            up = obs & (v > schema.thresholds[attr])
            up_flip, down_flip = schema.flips_of(attr)
            active[:, schema.flip_index[up_flip.display_name]] = up
            active[:, schema.flip_index[down_flip.display_name]] = obs & ~up
        observed[:, a] = obs

    return AbstractTable(
        schema=schema,
        active=active,
        observed=observed,
        labels=table.labels.copy(),
        n_classes=table.n_classes,
        row_ids=table.row_ids,
        provenance=table.provenance,
    )


def flip_probabilities(at: AbstractTable) -> np.ndarray:
    """Class-conditional flip probabilities, shape (n_classes, n_flips).

    P(f | c) counts records of class c with f active over records of class c
    where f's attribute is observed; an unobserved attribute yields 0.
    """
    attr_of = at.schema.flip_attribute_indices()
    probs = np.zeros((at.n_classes, at.schema.n_flips))
    for c in range(at.n_classes):
        mask = at.labels == c
        if not mask.any():
            raise DataError(f"class {c} has no records")
        active_counts = at.active[mask].sum(axis=0).astype(float)
        observed_counts = at.observed[mask].sum(axis=0).astype(float)[attr_of]
        np.divide(active_counts, observed_counts, out=probs[c], where=observed_counts > 0)
    return probs


def write_schema_csv(schema: FlipSchema, path: Path | str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["attribute", "kind", "threshold"])
        for attr in schema.attributes:
            if attr in schema.categorical_attributes:
                writer.writerow([attr, KIND_CATEGORICAL, ""])
            else:
                writer.writerow([attr, "continuous", repr(schema.thresholds[attr])])


def write_flip_probabilities_csv(
    probs: np.ndarray, schema: FlipSchema, path: Path | str
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["class", "flip", "probability"])
        for c in range(probs.shape[0]):
            for i, flip in enumerate(schema.flips):
                writer.writerow([c, flip.display_name, repr(float(probs[c, i]))])
