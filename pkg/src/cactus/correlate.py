"""Attribute correlation analysis on original (pre-abstraction) values.

Pearson coefficients are computed pairwise over the rows where both columns
are observed, categorical tokens standing in for their sorted-unique codes.
The |rho| graph feeds the same PageRank and community machinery used for the
knowledge graphs, plus a minimum spanning tree and Laplacian centralities.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from .community import ALGORITHMS, Partition, detect_communities
from .dtree import DecisionTree
from .errors import DataError
from .graphs import WeightedGraph, write_graphml
from .ingest import DataTable
from .kgraph import pagerank

_UNIT_TOL = 1e-12


@dataclass
class CorrelationResult:
    columns: list[str]
    matrix: pd.DataFrame
    warnings: list[tuple[str, str, float]]
    graph: WeightedGraph
    mst_edges: list[tuple[str, str, float, int]] = field(default_factory=list)
    node_scores: dict[str, tuple[float, float]] = field(default_factory=dict)
    partitions: list[Partition] = field(default_factory=list)
    n_components: int = 1


def correlation_frame(table: DataTable, columns: Sequence[str]) -> pd.DataFrame:
    """Numeric view of the requested columns, label column included."""
    codes = table.numeric_codes()
    frame = pd.DataFrame(index=table.features.index)
    for col in columns:
        if col == table.label_name:
            frame[col] = table.labels.astype(float)
        elif col in codes.columns:
            frame[col] = codes[col]
        else:
            raise DataError(f"unknown correlation column {col!r}")
    return frame


def correlation_matrix(table: DataTable, columns: Sequence[str]) -> pd.DataFrame:
    """Pairwise-complete Pearson coefficients over the given columns.

    Pairs with fewer than two complete rows or zero variance stay undefined
    (NaN).
    """
    if len(columns) < 2:
        raise DataError("correlation needs at least 2 columns")
    frame = correlation_frame(table, columns)
    return frame.corr(method="pearson", min_periods=2)


def unit_correlation_warnings(matrix: pd.DataFrame) -> list[tuple[str, str, float]]:
    """Off-diagonal pairs whose correlation is exactly +-1."""
    warnings = []
    cols = list(matrix.columns)
    for i, a in enumerate(cols):
        for b in cols[i + 1 :]:
            rho = matrix.at[a, b]
            if pd.notna(rho) and abs(abs(rho) - 1.0) < _UNIT_TOL:
                warnings.append((a, b, float(rho)))
    return warnings


def correlation_graph(matrix: pd.DataFrame, remove_self_loops: bool = True) -> WeightedGraph:
    """Graph over the attributes with |rho| edge weights.

    Every defined off-diagonal pair contributes an edge; self-loops (always
    weight 1) are kept only when ``remove_self_loops`` is false.
    """
    cols = list(matrix.columns)
    graph = WeightedGraph(cols)
    for i, a in enumerate(cols):
        if not remove_self_loops and pd.notna(matrix.at[a, a]):
            graph.add_edge(a, a, abs(float(matrix.at[a, a])))
        for b in cols[i + 1 :]:
            rho = matrix.at[a, b]
            if pd.notna(rho):
                graph.add_edge(a, b, abs(float(rho)))
    return graph


class _UnionFind:
    def __init__(self, items: Sequence[str]) -> None:
        self._parent = {item: item for item in items}

    def root(self, item: str) -> str:
        while self._parent[item] != item:
            self._parent[item] = self._parent[self._parent[item]]
            item = self._parent[item]
        return item

    def join(self, a: str, b: str) -> bool:
        ra, rb = self.root(a), self.root(b)
        if ra == rb:
            return False
        self._parent[max(ra, rb)] = min(ra, rb)
        return True


def mst(graph: WeightedGraph) -> tuple[list[tuple[str, str, float, int]], int]:
    """Kruskal minimum spanning forest with edge cost 1 - |rho|.

    Returns the edges as (source, target, weight, component) plus the number
    of components; a disconnected graph yields one tree per component.
    """
    nodes = graph.nodes
    uf = _UnionFind(nodes)
    candidates = sorted(
        ((1.0 - w, u, v) for u, v, w in graph.edges() if u != v),
    )
    chosen = []
    for cost, u, v in candidates:
        if uf.join(u, v):
            chosen.append((u, v, 1.0 - cost))

    component_of: dict[str, int] = {}
    for node in nodes:
        root = uf.root(node)
        if root not in component_of:
            component_of[root] = len(component_of)
    edges = [
        (u, v, w, component_of[uf.root(u)]) for u, v, w in sorted(chosen)
    ]
    return edges, len(component_of)


def laplacian_centrality(graph: WeightedGraph) -> dict[str, float]:
    """Relative Laplacian-energy drop when a node is removed.

    The energy of a weighted graph is the sum of squared weighted degrees
    plus twice the sum of squared edge weights; each node's score is the
    fraction of that energy lost by deleting it. Zero-energy graphs score 0
    everywhere.
    """
    nodes = graph.nodes
    if len(nodes) < 2:
        raise DataError("laplacian centrality needs at least 2 nodes")
    weights = graph.weight_matrix(nodes)
    np.fill_diagonal(weights, 0.0)

    def energy(mat: np.ndarray) -> float:
        degrees = mat.sum(axis=1)
        return float((degrees**2).sum() + 2.0 * (np.triu(mat) ** 2).sum())

    total = energy(weights)
    if total == 0.0:
        return {node: 0.0 for node in nodes}
    scores = {}
    for i, node in enumerate(nodes):
        keep = np.delete(np.arange(len(nodes)), i)
        reduced = weights[np.ix_(keep, keep)]
        scores[node] = (total - energy(reduced)) / total
    return scores


def preselect_columns(table: DataTable, tree: DecisionTree | None) -> list[str]:
    """Columns worth correlating: the tree's split attributes plus the label.

    Without a fitted tree (preprocessing disabled) every column is returned.
    """
    if tree is None:
        return table.feature_names + [table.label_name]
    used = sorted(tree.split_attributes())
    return used + [table.label_name]


def analyse(
    table: DataTable,
    columns: Sequence[str],
    remove_self_loops: bool = True,
    damping: float = 0.85,
) -> CorrelationResult:
    """Full correlation pipeline over the given columns."""
    matrix = correlation_matrix(table, columns)
    warnings = unit_correlation_warnings(matrix)
    graph = correlation_graph(matrix, remove_self_loops=remove_self_loops)
    mst_edges, n_components = mst(graph)
    ranks, _ = pagerank(graph, damping=damping)
    laplacian = (
        laplacian_centrality(graph) if graph.n_nodes >= 2 else {n: 0.0 for n in graph.nodes}
    )
    node_scores = {node: (ranks[node], laplacian[node]) for node in graph.nodes}
    partitions = [
        detect_communities(graph, algorithm, graph_id="correlation")
        for algorithm in ALGORITHMS
    ]
    return CorrelationResult(
        columns=list(columns),
        matrix=matrix,
        warnings=warnings,
        graph=graph,
        mst_edges=mst_edges,
        node_scores=node_scores,
        partitions=partitions,
        n_components=n_components,
    )


def write_correlation_csv(matrix: pd.DataFrame, path: Path | str) -> None:
    matrix.to_csv(path, index_label="")


def write_warnings_csv(warnings: list[tuple[str, str, float]], path: Path | str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["attribute_a", "attribute_b", "correlation"])
        for a, b, rho in warnings:
            writer.writerow([a, b, repr(rho)])


def write_mst_csv(
    edges: list[tuple[str, str, float, int]], path: Path | str
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["source", "target", "weight", "component"])
        for u, v, w, component in edges:
            writer.writerow([u, v, repr(w), component])


def write_correlation_graphml(result: CorrelationResult, path: Path | str) -> None:
    node_attrs = {
        node: {"pagerank": pr, "laplacian": lap}
        for node, (pr, lap) in result.node_scores.items()
    }
    write_graphml(path, result.graph, node_attrs=node_attrs)
