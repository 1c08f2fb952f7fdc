"""End-to-end orchestration over every (binarisation, stratum) configuration.

Each configuration gets its own output subdirectory with every intermediate
result persisted: the cleaned table, the flip schema and probabilities, one
knowledge graph per class, community partitions, predictions and ranks, the
correlation analysis, the auxiliary decision tree, and the probability
plots. A JSON manifest records layout and warnings; wall-clock timings go to
a separate file so the manifest stays byte-reproducible.
"""
from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, TypeVar

from . import classify as classify_mod
from . import correlate as correlate_mod
from .abstraction import (
    abstract_table,
    flip_probabilities,
    infer_schema,
    write_flip_probabilities_csv,
    write_schema_csv,
)
from .community import ALGORITHMS, detect_communities, write_communities_csv, write_partition_quality_csv
from .config import RunConfig
from .dtree import export_tree, fit_tree
from .errors import CactusError
from .ingest import DataTable, binarise_labels, load_table, stratify
from .kgraph import build_graph, export_graph, score_graph
from .plots import plot_distributions

logger = logging.getLogger(__name__)

T = TypeVar("T")
U = TypeVar("U")


@dataclass
class ConfigurationRecord:
    binarisation: str
    stratum: str
    path: str
    status: str = "ok"
    error: str | None = None
    warnings: list[str] = field(default_factory=list)
    metrics: dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "binarisation": self.binarisation,
            "stratum": self.stratum,
            "path": self.path,
            "status": self.status,
            "error": self.error,
            "warnings": list(self.warnings),
            "metrics": dict(self.metrics),
        }


@dataclass
class RunManifest:
    config: dict
    configurations: list[ConfigurationRecord] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    error: str | None = None
    timings: dict[str, dict[str, float]] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.error is None and all(
            record.status == "ok" for record in self.configurations
        )

    def write(self, directory: Path | str) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        payload = {
            "config": self.config,
            "configurations": [r.as_dict() for r in self.configurations],
            "error": self.error,
            "ok": self.ok,
            "warnings": list(self.warnings),
        }
        (directory / "manifest.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        (directory / "timings.json").write_text(
            json.dumps(self.timings, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )


def _map_jobs(fn: Callable[[T], U], items: Iterable[T], jobs: int) -> list[U]:
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


class _Stopwatch:
    def __init__(self) -> None:
        self.laps: dict[str, float] = {}

    def time(self, name: str):
        laps = self.laps

        class _Lap:
            def __enter__(self) -> None:
                self._start = time.perf_counter()

            def __exit__(self, *exc) -> None:
                laps[name] = laps.get(name, 0.0) + time.perf_counter() - self._start

        return _Lap()


def run_configuration(
    table: DataTable,
    config: RunConfig,
    directory: Path,
    jobs: int = 1,
    with_correlation: bool = True,
    with_preprocessing: bool = True,
    timings: dict[str, float] | None = None,
) -> ConfigurationRecord:
    """Run every module on one table slice, persisting all artifacts."""
    record = ConfigurationRecord(
        binarisation=table.provenance.binarisation,
        stratum=table.provenance.stratum,
        path=str(directory),
    )
    watch = _Stopwatch()
    directory.mkdir(parents=True, exist_ok=True)
    table.to_csv(directory / "table.csv")

    tree = None
    if with_preprocessing:
        with watch.time("tree"):
            tree = fit_tree(table, config.max_tree_depth)
            export_tree(tree, directory / "tree")

    with watch.time("abstraction"):
        schema = infer_schema(table, config.forced_categorical)
        at = abstract_table(table, schema)
        probs = flip_probabilities(at)
        schema_dir = directory / "schema"
        schema_dir.mkdir(exist_ok=True)
        write_schema_csv(schema, schema_dir / "schema.csv")
        write_flip_probabilities_csv(probs, schema, schema_dir / "flip_probabilities.csv")
        _write_active_flips(at, directory / "active_flips.csv")

    with watch.time("graphs"):
        def build_and_score(class_index: int):
            kg = build_graph(at, class_index, config.edge_weight_floor, probs)
            return score_graph(kg, damping=config.damping)

        graphs = _map_jobs(build_and_score, range(at.n_classes), jobs)
        graphs_dir = directory / "graphs"
        for kg in graphs:
            export_graph(kg, graphs_dir)
            if not kg.converged:
                record.warnings.append(
                    f"pagerank did not converge for class {kg.class_index}"
                )

    with watch.time("communities"):
        pairs = [(kg, algorithm) for kg in graphs for algorithm in ALGORITHMS]
        partitions = _map_jobs(
            lambda pair: detect_communities(
                pair[0].graph, pair[1], graph_id=f"class_{pair[0].class_index}"
            ),
            pairs,
            jobs,
        )
        communities_dir = directory / "communities"
        communities_dir.mkdir(exist_ok=True)
        for partition in partitions:
            write_communities_csv(
                partition,
                communities_dir / f"communities_{partition.graph_id.removeprefix('class_')}_{partition.algorithm}.csv",
            )
            if partition.warning:
                record.warnings.append(f"{partition.graph_id}: {partition.warning}")
        write_partition_quality_csv(partitions, communities_dir / "partition_quality.csv")

    with watch.time("classification"):
        report = classify_mod.classify_table(at, probs, graphs, config.smoothing_epsilon)
        ranks = classify_mod.rank_report(probs, schema)
        predictions_dir = directory / "predictions"
        predictions_dir.mkdir(exist_ok=True)
        classify_mod.write_predictions_csv(report, predictions_dir / "predictions.csv")
        classify_mod.write_metrics_csv(report, predictions_dir / "metrics.csv")
        classify_mod.write_ranks_csv(ranks, schema, predictions_dir / "ranks.csv")
        if report.n_empty:
            record.warnings.append(
                f"{report.n_empty} records had no active flips; "
                "predicted the majority class"
            )
        record.metrics = {
            "accuracy_pagerank": report.accuracy["pagerank"],
            "accuracy_probabilistic": report.accuracy["probabilistic"],
            "balanced_accuracy_pagerank": report.balanced["pagerank"],
            "balanced_accuracy_probabilistic": report.balanced["probabilistic"],
            "agreement": report.agreement,
        }

    with watch.time("plots"):
        plot_distributions(probs, schema, ranks.marker_ranks, directory / "plots")

    if with_correlation:
        with watch.time("correlation"):
            columns = correlate_mod.preselect_columns(table, tree)
            if len(columns) < 2:
                record.warnings.append(
                    "correlation skipped: fewer than 2 columns after preselection"
                )
            else:
                result = correlate_mod.analyse(
                    table,
                    columns,
                    remove_self_loops=config.remove_self_loops,
                    damping=config.damping,
                )
                correlation_dir = directory / "correlation"
                correlation_dir.mkdir(exist_ok=True)
                correlate_mod.write_correlation_csv(
                    result.matrix, correlation_dir / "correlation.csv"
                )
                correlate_mod.write_warnings_csv(
                    result.warnings, correlation_dir / "correlation_warnings.csv"
                )
                correlate_mod.write_correlation_graphml(
                    result, correlation_dir / "correlation.graphml"
                )
                correlate_mod.write_mst_csv(result.mst_edges, correlation_dir / "mst.csv")
                for partition in result.partitions:
                    write_communities_csv(
                        partition,
                        correlation_dir / f"communities_correlation_{partition.algorithm}.csv",
                    )
                write_partition_quality_csv(
                    result.partitions, correlation_dir / "partition_quality.csv"
                )
                for a, b, rho in result.warnings:
                    record.warnings.append(
                        f"correlation of {rho:+.0f} between {a!r} and {b!r}"
                    )
                if result.n_components > 1:
                    record.warnings.append(
                        f"correlation graph has {result.n_components} components; "
                        "spanning forest emitted"
                    )

    if timings is not None:
        timings.update(watch.laps)
    return record


def run(
    config: RunConfig,
    jobs: int = 1,
    with_correlation: bool = True,
    with_preprocessing: bool = True,
) -> RunManifest:
    """Execute the full pipeline for every configured (binarisation, stratum).

    A failing configuration is recorded in the manifest and does not stop
    the others; partial outputs are kept.
    """
    manifest = RunManifest(config=config.snapshot())
    out_root = config.output_dir
    started = time.perf_counter()

    try:
        table = load_table(config)
    except CactusError as exc:
        manifest.error = f"ingest: {exc}"
        logger.error("ingest failed: %s", exc)
        manifest.timings["total"] = {"seconds": time.perf_counter() - started}
        manifest.write(out_root)
        return manifest

    slices: list[DataTable] = []
    for divider in config.binarisations:
        bin_id = "original" if divider == "original" else f"div{divider}"
        try:
            binarised = table if divider == "original" else binarise_labels(table, divider)
            if config.stratifications:
                for attribute in config.stratifications:
                    slices.extend(stratify(binarised, attribute))
            else:
                slices.append(binarised)
        except CactusError as exc:
            manifest.configurations.append(
                ConfigurationRecord(
                    binarisation=bin_id,
                    stratum="all",
                    path=bin_id,
                    status="failed",
                    error=str(exc),
                )
            )
            logger.error("binarisation %s failed: %s", bin_id, exc)

    for part in slices:
        rel = Path(part.provenance.binarisation) / part.provenance.stratum
        directory = out_root / rel
        stage_timings: dict[str, float] = {}
        logger.info("running configuration %s", rel)
        try:
            record = run_configuration(
                part,
                config,
                directory,
                jobs=jobs,
                with_correlation=with_correlation,
                with_preprocessing=with_preprocessing,
                timings=stage_timings,
            )
        except CactusError as exc:
            record = ConfigurationRecord(
                binarisation=part.provenance.binarisation,
                stratum=part.provenance.stratum,
                path=str(rel),
                status="failed",
                error=str(exc),
            )
            logger.error("configuration %s failed: %s", rel, exc)
        record.path = str(rel)
        manifest.configurations.append(record)
        manifest.warnings.extend(
            f"{record.binarisation}/{record.stratum}: {w}" for w in record.warnings
        )
        manifest.timings[str(rel)] = stage_timings

    manifest.timings["total"] = {"seconds": time.perf_counter() - started}
    manifest.write(out_root)
    return manifest


def _write_active_flips(at, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["row_id", "label", "flips"])
        for i in range(at.n_rows):
            writer.writerow(
                [at.row_ids[i], at.labels[i], ";".join(at.record_flips(i))]
            )
