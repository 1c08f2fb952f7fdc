"""Deterministic community detection and partition quality scores.

All three algorithms avoid any randomness: nodes are always visited in
sorted-id order and ties break toward the smallest community label, so
repeated runs on the same graph give identical partitions.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import DataError
from .graphs import WeightedGraph

logger = logging.getLogger(__name__)

ALGORITHM_GREEDY = "greedy"
ALGORITHM_LABEL_PROPAGATION = "label_propagation"
ALGORITHM_LOUVAIN = "louvain"
ALGORITHMS = (ALGORITHM_GREEDY, ALGORITHM_LABEL_PROPAGATION, ALGORITHM_LOUVAIN)

_MAX_LPA_SWEEPS = 100
_MAX_LOUVAIN_SWEEPS = 1000


@dataclass
class Partition:
    graph_id: str
    algorithm: str
    assignment: dict[str, int]
    modularity: float
    coverage: float
    performance: float
    warning: str | None = None

    @property
    def n_communities(self) -> int:
        return len(set(self.assignment.values()))

    def communities(self) -> list[set[str]]:
        groups: dict[int, set[str]] = {}
        for node, cid in self.assignment.items():
            groups.setdefault(cid, set()).add(node)
        return [groups[cid] for cid in sorted(groups)]


def _doubled_diagonal_matrix(graph: WeightedGraph, order: list[str]) -> np.ndarray:
    # Self-loops count twice toward degrees and intra-community weight,
    # matching the usual modularity bookkeeping.
    mat = graph.weight_matrix(order)
    mat[np.diag_indices(len(order))] *= 2.0
    return mat


def partition_quality(
    graph: WeightedGraph, assignment: Mapping[str, int]
) -> tuple[float, float, float]:
    """(modularity, coverage, performance) of a node-to-community map.

    Modularity and coverage use edge weights; performance counts unweighted
    node pairs (edges inside communities plus missing edges across them).
    A graph with no edge weight has modularity and coverage 0.
    """
    nodes = graph.nodes
    missing = [u for u in nodes if u not in assignment]
    if missing:
        raise DataError(f"assignment does not cover nodes: {missing[:5]}")
    comm = np.array([assignment[u] for u in nodes])
    adj = _doubled_diagonal_matrix(graph, nodes)
    two_m = adj.sum()

    if two_m == 0.0:
        modularity = 0.0
        coverage = 0.0
    else:
        same = comm[:, None] == comm[None, :]
        intra = adj[same].sum() / two_m
        degrees = adj.sum(axis=1)
        expected = 0.0
        for cid in np.unique(comm):
            sigma_tot = degrees[comm == cid].sum()
            expected += (sigma_tot / two_m) ** 2
        modularity = float(intra - expected)
        total = graph.total_weight()
        intra_weight = sum(
            w for u, v, w in graph.edges() if assignment[u] == assignment[v]
        )
        coverage = float(intra_weight / total) if total > 0 else 0.0

    n = len(nodes)
    n_pairs = n * (n - 1) // 2
    if n_pairs == 0:
        performance = 1.0
    else:
        weights = graph.weight_matrix(nodes)
        good = 0
        for i in range(n):
            for j in range(i + 1, n):
                has_edge = weights[i, j] != 0.0
                same_comm = comm[i] == comm[j]
                if (has_edge and same_comm) or (not has_edge and not same_comm):
                    good += 1
        performance = good / n_pairs
    return modularity, coverage, float(performance)


def _finalize(
    graph_id: str,
    algorithm: str,
    graph: WeightedGraph,
    raw_labels: Iterable[int],
    warning: str | None = None,
) -> Partition:
    """Re-pack raw labels densely (first occurrence over sorted nodes)."""
    nodes = graph.nodes
    dense: dict[int, int] = {}
    assignment: dict[str, int] = {}
    for node, raw in zip(nodes, raw_labels):
        if raw not in dense:
            dense[raw] = len(dense)
        assignment[node] = dense[raw]
    modularity, coverage, performance = partition_quality(graph, assignment)
    return Partition(
        graph_id=graph_id,
        algorithm=algorithm,
        assignment=assignment,
        modularity=modularity,
        coverage=coverage,
        performance=performance,
        warning=warning,
    )


def greedy_communities(graph: WeightedGraph, graph_id: str = "graph") -> Partition:
    """Agglomerative modularity optimisation.

    Starts from singletons and repeatedly merges the community pair with the
    largest modularity gain until no merge improves it; tied gains merge the
    smallest (id, id) pair. Community ids track their smallest member.
    """
    nodes = graph.nodes
    if not nodes:
        raise DataError("graph has no nodes")
    n = len(nodes)
    adj = _doubled_diagonal_matrix(graph, nodes)
    two_m = adj.sum()
    labels = list(range(n))
    if two_m == 0.0:
        return _finalize(graph_id, ALGORITHM_GREEDY, graph, labels)
    m = two_m / 2.0

    sigma = {i: float(adj[i].sum()) for i in range(n)}
    weights = graph.weight_matrix(nodes)
    between: dict[tuple[int, int], float] = {}
    for i in range(n):
        for j in range(i + 1, n):
            if weights[i, j] != 0.0:
                between[(i, j)] = float(weights[i, j])

    parent = {i: i for i in range(n)}
    while True:
        best_gain = 0.0
        best_pair: tuple[int, int] | None = None
        for a, b in sorted(between):
            gain = between[(a, b)] / m - sigma[a] * sigma[b] / (2.0 * m * m)
            if gain > best_gain:
                best_gain = gain
                best_pair = (a, b)
        if best_pair is None:
            break
        a, b = best_pair
        sigma[a] += sigma.pop(b)
        parent[b] = a
        del between[(a, b)]
        for pair in [p for p in between if b in p]:
            other = pair[0] if pair[1] == b else pair[1]
            w = between.pop(pair)
            key = (min(a, other), max(a, other))
            between[key] = between.get(key, 0.0) + w

    def root(i: int) -> int:
        while parent[i] != i:
            i = parent[i]
        return i

    return _finalize(graph_id, ALGORITHM_GREEDY, graph, [root(i) for i in range(n)])


def label_propagation(graph: WeightedGraph, graph_id: str = "graph") -> Partition:
    """Deterministic asynchronous label propagation.

    Every node starts with its own label; sweeping nodes in sorted order,
    each adopts the label carrying the largest incident weight (smallest
    label on ties) until a full sweep changes nothing.
    """
    nodes = graph.nodes
    if not nodes:
        raise DataError("graph has no nodes")
    n = len(nodes)
    index = {u: i for i, u in enumerate(nodes)}
    incident: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for u, v, w in graph.edges():
        if w == 0.0:
            continue
        i, j = index[u], index[v]
        incident[i].append((j, w))
        if i != j:
            incident[j].append((i, w))

    labels = list(range(n))
    warning = None
    for _ in range(_MAX_LPA_SWEEPS):
        changed = False
        for i in range(n):
            sums: dict[int, float] = {}
            for j, w in incident[i]:
                sums[labels[j]] = sums.get(labels[j], 0.0) + w
            if not sums:
                continue
            top = max(sums.values())
            best = min(label for label, s in sums.items() if s == top)
            if best != labels[i]:
                labels[i] = best
                changed = True
        if not changed:
            break
    else:
        warning = f"label propagation did not stabilise within {_MAX_LPA_SWEEPS} sweeps"
        logger.warning("%s (graph %s)", warning, graph_id)

    return _finalize(graph_id, ALGORITHM_LABEL_PROPAGATION, graph, labels, warning)


def _louvain_level(adj: np.ndarray) -> tuple[np.ndarray, int]:
    """One local-moving phase. Returns (dense labels, number of moves)."""
    n = adj.shape[0]
    degrees = adj.sum(axis=1)
    two_m = adj.sum()
    comm = np.arange(n)
    sigma_tot = degrees.copy()
    neighbor_lists = [
        [(j, adj[i, j]) for j in np.flatnonzero(adj[i]) if j != i] for i in range(n)
    ]

    total_moves = 0
    for _ in range(_MAX_LOUVAIN_SWEEPS):
        moves = 0
        for i in range(n):
            current = comm[i]
            link_to: dict[int, float] = {}
            for j, w in neighbor_lists[i]:
                link_to[comm[j]] = link_to.get(comm[j], 0.0) + w
            sigma_tot[current] -= degrees[i]
            best_comm = current
            best_score = link_to.get(current, 0.0) - degrees[i] * sigma_tot[current] / two_m
            for cid in sorted(link_to):
                if cid == current:
                    continue
                score = link_to[cid] - degrees[i] * sigma_tot[cid] / two_m
                if score > best_score or (score == best_score and cid < best_comm):
                    best_score = score
                    best_comm = cid
            comm[i] = best_comm
            sigma_tot[best_comm] += degrees[i]
            if best_comm != current:
                moves += 1
        total_moves += moves
        if moves == 0:
            break
    else:
        logger.warning("louvain level hit the sweep cap; using the current labels")

    dense: dict[int, int] = {}
    labels = np.empty(n, dtype=np.int64)
    for i in range(n):
        if comm[i] not in dense:
            dense[comm[i]] = len(dense)
        labels[i] = dense[comm[i]]
    return labels, total_moves


def louvain(graph: WeightedGraph, graph_id: str = "graph") -> Partition:
    """Two-phase modularity optimisation with deterministic node order.

    Local moves sweep nodes in sorted order (smallest community id on ties);
    the graph is then aggregated by community and the process repeats until
    no move improves modularity. Nodes without links stay in singleton
    communities.
    """
    nodes = graph.nodes
    if not nodes:
        raise DataError("graph has no nodes")
    n = len(nodes)
    adj = _doubled_diagonal_matrix(graph, nodes)
    if adj.sum() == 0.0:
        return _finalize(graph_id, ALGORITHM_LOUVAIN, graph, range(n))

    membership = np.arange(n)
    current = adj
    while True:
        labels, moves = _louvain_level(current)
        if moves == 0:
            break
        membership = labels[membership]
        n_comms = int(labels.max()) + 1
        if n_comms == current.shape[0]:
            break
        onehot = np.zeros((current.shape[0], n_comms))
        onehot[np.arange(current.shape[0]), labels] = 1.0
        current = onehot.T @ current @ onehot

    return _finalize(graph_id, ALGORITHM_LOUVAIN, graph, membership.tolist())


def detect_communities(
    graph: WeightedGraph, algorithm: str, graph_id: str = "graph"
) -> Partition:
    if algorithm == ALGORITHM_GREEDY:
        return greedy_communities(graph, graph_id)
    if algorithm == ALGORITHM_LABEL_PROPAGATION:
        return label_propagation(graph, graph_id)
    if algorithm == ALGORITHM_LOUVAIN:
        return louvain(graph, graph_id)
    raise ValueError(f"unknown community algorithm {algorithm!r}")


def write_communities_csv(partition: Partition, path: Path | str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["node", "community"])
        for node in sorted(partition.assignment):
            writer.writerow([node, partition.assignment[node]])


def write_partition_quality_csv(partitions: Iterable[Partition], path: Path | str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["class", "algorithm", "modularity", "coverage", "performance"])
        for part in partitions:
            writer.writerow(
                [
                    part.graph_id,
                    part.algorithm,
                    repr(part.modularity),
                    repr(part.coverage),
                    repr(part.performance),
                ]
            )
