"""Lightweight undirected weighted graph plus deterministic GraphML output."""
from __future__ import annotations

import csv
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"


class WeightedGraph:
    """Undirected weighted graph over string node ids.

    Node iteration order is always sorted by id, which keeps every algorithm
    built on top of this class deterministic.
    """

    def __init__(self, nodes: Iterable[str] = ()) -> None:
        self._adj: dict[str, dict[str, float]] = {}
        for name in nodes:
            self.add_node(name)

    def add_node(self, name: str) -> None:
        self._adj.setdefault(name, {})

    def add_edge(self, u: str, v: str, weight: float) -> None:
        self.add_node(u)
        self.add_node(v)
        self._adj[u][v] = float(weight)
        self._adj[v][u] = float(weight)

    @property
    def nodes(self) -> list[str]:
        return sorted(self._adj)

    @property
    def n_nodes(self) -> int:
        return len(self._adj)

    @property
    def n_edges(self) -> int:
        return len(self.edges())

    def has_node(self, name: str) -> bool:
        return name in self._adj

    def weight(self, u: str, v: str) -> float:
        return self._adj.get(u, {}).get(v, 0.0)

    def neighbors(self, u: str) -> dict[str, float]:
        return dict(self._adj[u])

    def degree(self, u: str) -> float:
        return float(sum(self._adj[u].values()))

    def edges(self) -> list[tuple[str, str, float]]:
        """Sorted edge list with u <= v (self-loops appear once)."""
        out = []
        for u in self.nodes:
            for v, w in self._adj[u].items():
                if u <= v:
                    out.append((u, v, w))
        out.sort()
        return out

    def total_weight(self) -> float:
        return float(sum(w for _, _, w in self.edges()))

    def weight_matrix(self, order: list[str] | None = None) -> np.ndarray:
        """Symmetric weight matrix; diagonal holds self-loop weights."""
        if order is None:
            order = self.nodes
        index = {name: i for i, name in enumerate(order)}
        mat = np.zeros((len(order), len(order)))
        for u, v, w in self.edges():
            i, j = index[u], index[v]
            mat[i, j] = w
            mat[j, i] = w
        return mat

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, names: list[str] | None = None) -> "WeightedGraph":
        n = matrix.shape[0]
        if names is None:
            names = [f"n{i}" for i in range(n)]
        graph = cls(names)
        for i in range(n):
            for j in range(i, n):
                if matrix[i, j] != 0.0:
                    graph.add_edge(names[i], names[j], float(matrix[i, j]))
        return graph


def _fmt(value: object) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_graphml(
    path: Path | str,
    graph: WeightedGraph,
    node_attrs: Mapping[str, Mapping[str, object]] | None = None,
    edge_attrs: Mapping[tuple[str, str], Mapping[str, object]] | None = None,
    attr_types: Mapping[str, str] | None = None,
) -> None:
    """Write the graph as GraphML with declared attribute keys.

    ``node_attrs`` maps node -> {attr name -> value}; ``edge_attrs`` maps the
    (u, v) pair with u <= v. Attribute types default to "double" unless
    overridden in ``attr_types`` (e.g. {"kind": "string"}). Output is fully
    deterministic: nodes and edges are sorted, attributes keep declaration
    order.
    """
    node_attrs = node_attrs or {}
    edge_attrs = edge_attrs or {}
    attr_types = dict(attr_types or {})

    node_keys: list[str] = []
    for attrs in node_attrs.values():
        for name in attrs:
            if name not in node_keys:
                node_keys.append(name)
    edge_keys: list[str] = ["weight"]
    for attrs in edge_attrs.values():
        for name in attrs:
            if name not in edge_keys:
                edge_keys.append(name)

    root = ET.Element("graphml", xmlns=GRAPHML_NS)
    key_ids: dict[tuple[str, str], str] = {}
    for domain, names in (("node", node_keys), ("edge", edge_keys)):
        for name in names:
            key_id = f"d{len(key_ids)}"
            key_ids[(domain, name)] = key_id
            ET.SubElement(
                root,
                "key",
                id=key_id,
                attrib={
                    "for": domain,
                    "attr.name": name,
                    "attr.type": attr_types.get(name, "double"),
                },
            )

    graph_el = ET.SubElement(root, "graph", id="G", edgedefault="undirected")
    for node in graph.nodes:
        node_el = ET.SubElement(graph_el, "node", id=node)
        for name, value in (node_attrs.get(node) or {}).items():
            data = ET.SubElement(node_el, "data", key=key_ids[("node", name)])
            data.text = _fmt(value)
    for u, v, weight in graph.edges():
        edge_el = ET.SubElement(graph_el, "edge", source=u, target=v)
        attrs = dict(edge_attrs.get((u, v)) or {})
        attrs.setdefault("weight", weight)
        for name, value in attrs.items():
            if (("edge", name)) not in key_ids:
                continue
            data = ET.SubElement(edge_el, "data", key=key_ids[("edge", name)])
            data.text = _fmt(value)

    tree = ET.ElementTree(root)
    ET.indent(tree)
    tree.write(path, encoding="utf-8", xml_declaration=True)


def write_edges_csv(path: Path | str, graph: WeightedGraph) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["source", "target", "weight"])
        for u, v, w in graph.edges():
            writer.writerow([u, v, repr(w)])
