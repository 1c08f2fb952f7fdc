"""Per-class knowledge graphs over the flip vocabulary.

Edges carry within-class joint probabilities of flip pairs, computed on the
fly from the abstract table (no persisted adjacency lists). Node significance
is weighted PageRank, corrected by the flip's conditional probability.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .abstraction import AbstractTable, KIND_DOWN, KIND_UP, flip_probabilities
from .errors import DataError, GraphError
from .graphs import WeightedGraph, write_edges_csv, write_graphml

logger = logging.getLogger(__name__)

DEFAULT_DAMPING = 0.85
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200

EDGE_UP_UP = "up_up"
EDGE_DOWN_DOWN = "down_down"
EDGE_MIXED = "mixed"


@dataclass
class KnowledgeGraph:
    class_index: int
    graph: WeightedGraph
    probability: dict[str, float]
    edge_kind: dict[tuple[str, str], str]
    pagerank: dict[str, float] = field(default_factory=dict)
    corrected: dict[str, float] = field(default_factory=dict)
    converged: bool = True


def _edge_kind(kind_u: str, kind_v: str) -> str:
    if kind_u == KIND_UP and kind_v == KIND_UP:
        return EDGE_UP_UP
    if kind_u == KIND_DOWN and kind_v == KIND_DOWN:
        return EDGE_DOWN_DOWN
    return EDGE_MIXED


def build_graph(
    at: AbstractTable,
    class_index: int,
    weight_floor: float = 0.0,
    probabilities: np.ndarray | None = None,
) -> KnowledgeGraph:
    """Build the class graph: one node per flip, edges weighted by the joint
    probability of the pair among class records where both attributes are
    observed. Flips of the same attribute never connect; edges at or below
    ``weight_floor`` are dropped.
    """
    mask = at.labels == class_index
    if not mask.any():
        raise DataError(f"class {class_index} has no records")
    if probabilities is None:
        probabilities = flip_probabilities(at)

    schema = at.schema
    active = at.active[mask].astype(np.float64)
    observed = at.observed[mask].astype(np.float64)
    joint = active.T @ active
    observed_pairs = observed.T @ observed
    attr_of = schema.flip_attribute_indices()
    denom = observed_pairs[np.ix_(attr_of, attr_of)]
    weights = np.divide(joint, denom, out=np.zeros_like(joint), where=denom > 0)
    same_attr = attr_of[:, None] == attr_of[None, :]
    weights[same_attr] = 0.0

    graph = WeightedGraph(f.display_name for f in schema.flips)
    edge_kind: dict[tuple[str, str], str] = {}
    n_flips = schema.n_flips
    for i in range(n_flips):
        for j in range(i + 1, n_flips):
            w = weights[i, j]
            if w <= weight_floor:
                continue
            u = schema.flips[i].display_name
            v = schema.flips[j].display_name
            graph.add_edge(u, v, w)
            key = (u, v) if u <= v else (v, u)
            edge_kind[key] = _edge_kind(schema.flips[i].kind, schema.flips[j].kind)

    probability = {
        f.display_name: float(probabilities[class_index, i])
        for i, f in enumerate(schema.flips)
    }
    return KnowledgeGraph(
        class_index=class_index,
        graph=graph,
        probability=probability,
        edge_kind=edge_kind,
    )


def pagerank_matrix(
    weights: np.ndarray,
    damping: float = DEFAULT_DAMPING,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> tuple[np.ndarray, bool]:
    """Weighted PageRank by power iteration on a symmetric weight matrix.

    Each undirected edge acts as two directed arcs; a node's outgoing mass is
    split in proportion to edge weights. Nodes without edges spread their
    mass uniformly. Iterates until the L1 change drops below ``tol``.

    Returns the score vector (sums to 1) and a convergence flag.
    """
    n = weights.shape[0]
    if n == 0:
        return np.zeros(0), True
    out_weight = weights.sum(axis=1)
    dangling = out_weight == 0.0
    transition = np.zeros_like(weights, dtype=float)
    np.divide(weights, out_weight[:, None], out=transition, where=~dangling[:, None])

    rank = np.full(n, 1.0 / n)
    base = (1.0 - damping) / n
    converged = False
    for _ in range(max_iter):
        new_rank = base + damping * (transition.T @ rank + rank[dangling].sum() / n)
        if np.abs(new_rank - rank).sum() < tol:
            rank = new_rank
            converged = True
            break
        rank = new_rank
    return rank, converged


def pagerank(
    graph: WeightedGraph,
    damping: float = DEFAULT_DAMPING,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> tuple[dict[str, float], bool]:
    """PageRank scores per node id. See :func:`pagerank_matrix`."""
    if not 0.0 < damping < 1.0:
        raise ValueError(f"damping must be in (0, 1), got {damping}")
    if tol <= 0.0:
        raise ValueError(f"tol must be > 0, got {tol}")
    order = graph.nodes
    scores, converged = pagerank_matrix(
        graph.weight_matrix(order), damping=damping, tol=tol, max_iter=max_iter
    )
    if not converged:
        logger.warning("pagerank did not converge within %d iterations", max_iter)
    return dict(zip(order, scores.tolist())), converged


def corrected_significance(kg: KnowledgeGraph) -> dict[str, float]:
    """PageRank times conditional probability, renormalised to sum to 1."""
    if not kg.pagerank:
        raise GraphError("pagerank has not been computed for this graph")
    raw = {
        node: kg.pagerank[node] * kg.probability.get(node, 0.0)
        for node in kg.graph.nodes
    }
    total = sum(raw.values())
    if total <= 0.0:
        raise GraphError(
            f"class {kg.class_index} graph is degenerate: all corrected scores are zero"
        )
    return {node: value / total for node, value in raw.items()}


def score_graph(
    kg: KnowledgeGraph,
    damping: float = DEFAULT_DAMPING,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> KnowledgeGraph:
    """Fill in pagerank and corrected significance, in place."""
    kg.pagerank, kg.converged = pagerank(
        kg.graph, damping=damping, tol=tol, max_iter=max_iter
    )
    kg.corrected = corrected_significance(kg)
    return kg


def export_graph(kg: KnowledgeGraph, directory: Path | str) -> tuple[Path, Path]:
    """Write ``class_<i>.graphml`` and ``class_<i>_edges.csv``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    graphml_path = directory / f"class_{kg.class_index}.graphml"
    edges_path = directory / f"class_{kg.class_index}_edges.csv"

    node_attrs = {
        node: {
            "probability": kg.probability.get(node, 0.0),
            "pagerank": kg.pagerank.get(node, 0.0),
            "corrected": kg.corrected.get(node, 0.0),
        }
        for node in kg.graph.nodes
    }
    edge_attrs = {
        (u, v): {"weight": w, "kind": kg.edge_kind.get((u, v), EDGE_MIXED)}
        for u, v, w in kg.graph.edges()
    }
    write_graphml(
        graphml_path,
        kg.graph,
        node_attrs=node_attrs,
        edge_attrs=edge_attrs,
        attr_types={"kind": "string"},
    )
    write_edges_csv(edges_path, kg.graph)
    return graphml_path, edges_path
