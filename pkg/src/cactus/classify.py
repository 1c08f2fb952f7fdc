"""Record classification against the per-class models, plus the rank metrics.

Two scorers are compared on every record: the Probabilistic one sums the
record's flip probabilities per class, the PageRank one sums the corrected
significances from each class graph. Their agreement rate doubles as a
sanity check on the knowledge graphs.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .abstraction import (
    AbstractTable,
    FlipSchema,
    abstract_table,
    flip_probabilities,
    infer_schema,
)
from .errors import DataError
from .ingest import DataTable
from .kgraph import KnowledgeGraph, build_graph, score_graph

METHOD_PAGERANK = "pagerank"
METHOD_PROBABILISTIC = "probabilistic"


@dataclass
class ClassificationReport:
    row_ids: np.ndarray
    truth: np.ndarray
    predictions: dict[str, np.ndarray]
    flagged_empty: np.ndarray
    confusion: dict[str, np.ndarray]
    accuracy: dict[str, float]
    balanced: dict[str, float]
    agreement: float

    @property
    def n_records(self) -> int:
        return len(self.truth)

    @property
    def n_empty(self) -> int:
        return int(self.flagged_empty.sum())


@dataclass
class RankReport:
    flip_ranks: dict[str, float]
    marker_ranks: dict[str, float]

    def markers_by_rank(self) -> list[tuple[str, float]]:
        return sorted(self.marker_ranks.items(), key=lambda kv: (-kv[1], kv[0]))


def classify_probabilistic(
    record: Iterable[str],
    probabilities: Mapping[tuple[int, str], float],
    epsilon: float,
    default: int | None = None,
) -> int:
    """Argmax over classes of the summed flip probabilities.

    Probabilities below ``epsilon`` are lifted to it so that a flip never
    vetoes a class outright. Ties go to the smallest class index; an empty
    record predicts ``default`` (or raises when no default is given).
    """
    flips = list(record)
    n_classes = max(c for c, _ in probabilities) + 1
    if not flips:
        if default is None:
            raise DataError("record has no active flips and no default class")
        return default
    scores = [
        sum(max(probabilities.get((c, f), 0.0), epsilon) for f in flips)
        for c in range(n_classes)
    ]
    return int(np.argmax(scores))


def classify_pagerank(
    record: Iterable[str],
    graphs: Sequence[KnowledgeGraph],
    default: int | None = None,
) -> int:
    """Argmax over classes of the summed corrected significances."""
    flips = list(record)
    if not flips:
        if default is None:
            raise DataError("record has no active flips and no default class")
        return default
    scores = [sum(kg.corrected.get(f, 0.0) for f in flips) for kg in graphs]
    return int(np.argmax(scores))


def confusion_matrix(truth: np.ndarray, predicted: np.ndarray, n_classes: int) -> np.ndarray:
    matrix = np.zeros((n_classes, n_classes), dtype=np.int64)
    for t, p in zip(truth, predicted):
        matrix[t, p] += 1
    return matrix


def balanced_accuracy(truth: np.ndarray, predicted: np.ndarray, n_classes: int) -> float:
    """Mean per-class recall. Every class must have at least one record."""
    truth = np.asarray(truth)
    predicted = np.asarray(predicted)
    recalls = []
    for c in range(n_classes):
        mask = truth == c
        if not mask.any():
            raise DataError(f"class {c} has no records; balanced accuracy undefined")
        recalls.append(float((predicted[mask] == c).mean()))
    return float(np.mean(recalls))


def flip_rank(
    flip: str, probabilities: Mapping[tuple[int, str], float], n_classes: int
) -> float:
    """Mean absolute change of P(flip | class) over unordered class pairs."""
    if n_classes < 2:
        raise DataError("rank needs at least 2 classes")
    values = [probabilities.get((c, flip), 0.0) for c in range(n_classes)]
    pairs = list(combinations(range(n_classes), 2))
    return float(sum(abs(values[i] - values[j]) for i, j in pairs) / len(pairs))


def marker_rank(flip_ranks: Sequence[float]) -> float:
    """Average rank over a marker's flips."""
    if len(flip_ranks) == 0:
        raise DataError("marker has no flips")
    return float(np.mean(flip_ranks))


def flip_ranks_matrix(probs: np.ndarray) -> np.ndarray:
    """Vectorised flip ranks for a (n_classes, n_flips) probability matrix."""
    n_classes = probs.shape[0]
    pairs = list(combinations(range(n_classes), 2))
    diffs = np.abs(np.stack([probs[i] - probs[j] for i, j in pairs]))
    return diffs.sum(axis=0) / len(pairs)


def rank_report(probs: np.ndarray, schema: FlipSchema) -> RankReport:
    ranks = flip_ranks_matrix(probs)
    flip_ranks = {
        flip.display_name: float(ranks[i]) for i, flip in enumerate(schema.flips)
    }
    marker_ranks = {
        attr: marker_rank([flip_ranks[f.display_name] for f in schema.flips_of(attr)])
        for attr in schema.attributes
    }
    return RankReport(flip_ranks=flip_ranks, marker_ranks=marker_ranks)


def classify_table(
    at: AbstractTable,
    probs: np.ndarray,
    graphs: Sequence[KnowledgeGraph],
    epsilon: float,
) -> ClassificationReport:
    """Classify every record with both scorers and assemble the report.

    Records with no active flips are flagged and assigned the majority class
    by both scorers.
    """
    n_classes = at.n_classes
    active = at.active.astype(np.float64)
    prob_scores = active @ np.maximum(probs, epsilon).T

    corrected = np.zeros((n_classes, at.schema.n_flips))
    for kg in graphs:
        for i, flip in enumerate(at.schema.flips):
            corrected[kg.class_index, i] = kg.corrected.get(flip.display_name, 0.0)
    pagerank_scores = active @ corrected.T

    empty = at.active.sum(axis=1) == 0
    majority = int(np.argmax(np.bincount(at.labels, minlength=n_classes)))
    pred_prob = prob_scores.argmax(axis=1)
    pred_pr = pagerank_scores.argmax(axis=1)
    pred_prob[empty] = majority
    pred_pr[empty] = majority

    predictions = {METHOD_PAGERANK: pred_pr, METHOD_PROBABILISTIC: pred_prob}
    confusion = {
        name: confusion_matrix(at.labels, pred, n_classes)
        for name, pred in predictions.items()
    }
    accuracy = {
        name: float((pred == at.labels).mean()) for name, pred in predictions.items()
    }
    balanced = {
        name: balanced_accuracy(at.labels, pred, n_classes)
        for name, pred in predictions.items()
    }
    return ClassificationReport(
        row_ids=at.row_ids,
        truth=at.labels,
        predictions=predictions,
        flagged_empty=empty,
        confusion=confusion,
        accuracy=accuracy,
        balanced=balanced,
        agreement=float((pred_pr == pred_prob).mean()),
    )


def evaluate_resubstitution(
    table: DataTable,
    forced_categorical: Iterable[str] = (),
    epsilon: float = 1e-9,
    weight_floor: float = 0.0,
    damping: float = 0.85,
) -> tuple[ClassificationReport, RankReport]:
    """Build the models on the full table and classify the same records."""
    schema = infer_schema(table, forced_categorical)
    at = abstract_table(table, schema)
    probs = flip_probabilities(at)
    graphs = [
        score_graph(build_graph(at, c, weight_floor, probs), damping=damping)
        for c in range(at.n_classes)
    ]
    report = classify_table(at, probs, graphs, epsilon)
    return report, rank_report(probs, schema)


def evaluate_kfold(
    table: DataTable,
    k: int = 5,
    forced_categorical: Iterable[str] = (),
    epsilon: float = 1e-9,
    weight_floor: float = 0.0,
    damping: float = 0.85,
) -> dict[str, float]:
    """Deterministic stratified k-fold evaluation (pooled predictions).

    Folds are assigned round-robin within each class in row order, so the
    split involves no randomness. Schemas and graphs are rebuilt on each
    training split; categorical values unseen in training count as missing.
    """
    if k < 2:
        raise DataError("k must be >= 2")
    n = table.n_rows
    fold_of = np.empty(n, dtype=np.int64)
    for c in range(table.n_classes):
        rows = np.flatnonzero(table.labels == c)
        fold_of[rows] = np.arange(len(rows)) % k

    pooled_truth: list[np.ndarray] = []
    pooled: dict[str, list[np.ndarray]] = {METHOD_PAGERANK: [], METHOD_PROBABILISTIC: []}
    for fold in range(k):
        test_mask = fold_of == fold
        train = DataTable(
            features=table.features.loc[~test_mask],
            labels=table.labels[~test_mask],
            n_classes=table.n_classes,
            label_name=table.label_name,
            provenance=table.provenance,
        )
        test = DataTable(
            features=table.features.loc[test_mask],
            labels=table.labels[test_mask],
            n_classes=table.n_classes,
            label_name=table.label_name,
            provenance=table.provenance,
        )
        schema = infer_schema(train, forced_categorical)
        at_train = abstract_table(train, schema)
        probs = flip_probabilities(at_train)
        graphs = [
            score_graph(build_graph(at_train, c, weight_floor, probs), damping=damping)
            for c in range(train.n_classes)
        ]
        at_test = abstract_table(test, schema, on_unseen="skip")
        report = classify_table(at_test, probs, graphs, epsilon)
        pooled_truth.append(report.truth)
        for name in pooled:
            pooled[name].append(report.predictions[name])

    truth = np.concatenate(pooled_truth)
    out: dict[str, float] = {}
    for name, parts in pooled.items():
        predicted = np.concatenate(parts)
        out[f"balanced_accuracy_{name}"] = balanced_accuracy(
            truth, predicted, table.n_classes
        )
        out[f"accuracy_{name}"] = float((predicted == truth).mean())
    return out


def write_predictions_csv(report: ClassificationReport, path: Path | str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["row_id", "truth", "pagerank", "probabilistic", "flagged"])
        for i in range(report.n_records):
            writer.writerow(
                [
                    report.row_ids[i],
                    report.truth[i],
                    report.predictions[METHOD_PAGERANK][i],
                    report.predictions[METHOD_PROBABILISTIC][i],
                    "true" if report.flagged_empty[i] else "false",
                ]
            )


def write_metrics_csv(report: ClassificationReport, path: Path | str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["metric", "value"])
        for name in (METHOD_PAGERANK, METHOD_PROBABILISTIC):
            writer.writerow([f"accuracy_{name}", repr(report.accuracy[name])])
            writer.writerow([f"balanced_accuracy_{name}", repr(report.balanced[name])])
        writer.writerow(["agreement", repr(report.agreement)])
        writer.writerow(["n_records", report.n_records])
        writer.writerow(["n_empty_records", report.n_empty])


def write_ranks_csv(ranks: RankReport, schema: FlipSchema, path: Path | str) -> None:
    """One row per flip with its rank and the marker average, sorted by the
    marker average descending."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["attribute", "flip", "flip_rank", "marker_rank"])
        for attr, avg in ranks.markers_by_rank():
            for flip in schema.flips_of(attr):
                writer.writerow(
                    [
                        attr,
                        flip.display_name,
                        repr(ranks.flip_ranks[flip.display_name]),
                        repr(avg),
                    ]
                )
