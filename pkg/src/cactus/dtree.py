"""Binary decision tree with the Shannon-entropy criterion.

Grown greedily on the raw table (categorical tokens as numeric codes) for
column preselection and interpretability cross-checks; not a tuned
classifier. Splits are midpoints between consecutive observed values and
rows with a missing split value follow the branch holding the majority of
the node's observed rows.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError
from .ingest import DataTable


def entropy(counts: np.ndarray) -> float:
    """Shannon entropy (base 2) of a class histogram."""
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def _entropy_rows(counts: np.ndarray) -> np.ndarray:
    totals = counts.sum(axis=1, keepdims=True)
    safe = np.where(totals > 0, totals, 1.0)
    p = counts / safe
    terms = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return -terms.sum(axis=1)


@dataclass
class TreeNode:
    node_id: int
    depth: int
    counts: np.ndarray
    node_entropy: float
    attribute: str | None = None
    threshold: float | None = None
    majority_to_left: bool = True
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.attribute is None

    @property
    def n_rows(self) -> int:
        return int(self.counts.sum())

    @property
    def leaf_class(self) -> int:
        return int(np.argmax(self.counts))


@dataclass
class DecisionTree:
    root: TreeNode
    feature_names: list[str]
    n_classes: int
    nodes: list[TreeNode] = field(default_factory=list)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def depth(self) -> int:
        return max(node.depth for node in self.nodes)

    def split_attributes(self) -> set[str]:
        return {node.attribute for node in self.nodes if not node.is_leaf}

    def predict(self, table: DataTable) -> np.ndarray:
        codes = table.numeric_codes()
        matrix = codes[self.feature_names].to_numpy(dtype=float)
        out = np.empty(len(matrix), dtype=np.int64)
        col_index = {name: i for i, name in enumerate(self.feature_names)}
        for i, row in enumerate(matrix):
            node = self.root
            while not node.is_leaf:
                value = row[col_index[node.attribute]]
                if np.isnan(value):
                    node = node.left if node.majority_to_left else node.right
                elif value <= node.threshold:
                    node = node.left
                else:
                    node = node.right
            out[i] = node.leaf_class
        return out

    def training_accuracy(self, table: DataTable) -> float:
        return float((self.predict(table) == table.labels).mean())


def _candidate_splits(
    values: np.ndarray, labels: np.ndarray, n_classes: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray] | None:
    """Per-threshold observed left sizes and class counts for one feature.

    Returns (thresholds, left_counts, left_sizes) over the observed rows,
    or None when the feature cannot split (fewer than 2 distinct values).
    """
    observed = ~np.isnan(values)
    v = values[observed]
    y = labels[observed]
    if len(v) < 2:
        return None
    order = np.argsort(v, kind="stable")
    v = v[order]
    y = y[order]
    boundaries = np.flatnonzero(v[:-1] != v[1:])
    if len(boundaries) == 0:
        return None
    thresholds = (v[boundaries] + v[boundaries + 1]) / 2.0
    onehot = np.zeros((len(v), n_classes))
    onehot[np.arange(len(v)), y] = 1.0
    cumulative = onehot.cumsum(axis=0)
    left_counts = cumulative[boundaries]
    left_sizes = boundaries + 1
    return thresholds, left_counts, left_sizes


def _best_split(
    matrix: np.ndarray,
    labels: np.ndarray,
    rows: np.ndarray,
    features_sorted: list[tuple[str, int]],
    n_classes: int,
    node_entropy: float,
) -> tuple[float, str, float, bool] | None:
    """Best (gain, attribute, threshold, majority_to_left) at a node.

    Features are scanned in name order and thresholds ascending, replacing
    the incumbent only on strictly larger gain, so ties resolve to the
    smallest (attribute name, threshold).
    """
    y = labels[rows]
    n_total = len(rows)
    best: tuple[float, str, float, bool] | None = None
    for name, j in features_sorted:
        values = matrix[rows, j]
        split = _candidate_splits(values, y, n_classes)
        if split is None:
            continue
        thresholds, left_counts, left_sizes = split
        observed = ~np.isnan(values)
        observed_counts = np.zeros(n_classes)
        for c, count in zip(*np.unique(y[observed], return_counts=True)):
            observed_counts[c] = count
        missing_counts = np.zeros(n_classes)
        for c, count in zip(*np.unique(y[~observed], return_counts=True)):
            missing_counts[c] = count

        right_counts = observed_counts[None, :] - left_counts
        right_sizes = int(observed.sum()) - left_sizes
        majority_left = (left_sizes >= right_sizes)[:, None]
        full_left = left_counts + np.where(majority_left, missing_counts, 0.0)
        full_right = right_counts + np.where(majority_left, 0.0, missing_counts)
        n_left = full_left.sum(axis=1)
        n_right = full_right.sum(axis=1)
        child_term = (
            n_left * _entropy_rows(full_left) + n_right * _entropy_rows(full_right)
        ) / n_total
        gains = node_entropy - child_term

        k = int(np.argmax(gains))
        if gains[k] > 0 and (best is None or gains[k] > best[0]):
            best = (float(gains[k]), name, float(thresholds[k]), bool(majority_left[k, 0]))
    return best


def fit_tree(table: DataTable, max_depth: int | None = None) -> DecisionTree:
    """Grow the tree on the full table until purity, zero gain, or
    ``max_depth``."""
    if table.n_classes < 2:
        raise DataError("decision tree needs at least 2 classes")
    codes = table.numeric_codes()
    feature_names = table.feature_names
    matrix = codes[feature_names].to_numpy(dtype=float)
    labels = table.labels
    n_classes = table.n_classes
    features_sorted = sorted((name, j) for j, name in enumerate(feature_names))

    nodes: list[TreeNode] = []

    def grow(rows: np.ndarray, depth: int) -> TreeNode:
        counts = np.bincount(labels[rows], minlength=n_classes).astype(float)
        node = TreeNode(
            node_id=len(nodes), depth=depth, counts=counts, node_entropy=entropy(counts)
        )
        nodes.append(node)
        if node.node_entropy == 0.0 or (max_depth is not None and depth >= max_depth):
            return node
        found = _best_split(
            matrix, labels, rows, features_sorted, n_classes, node.node_entropy
        )
        if found is None:
            return node
        _, attribute, threshold, majority_to_left = found
        j = feature_names.index(attribute)
        values = matrix[rows, j]
        missing = np.isnan(values)
        go_left = np.where(missing, majority_to_left, values <= threshold)
        node.attribute = attribute
        node.threshold = threshold
        node.majority_to_left = majority_to_left
        node.left = grow(rows[go_left], depth + 1)
        node.right = grow(rows[~go_left], depth + 1)
        return node

    root = grow(np.arange(len(labels)), 0)
    return DecisionTree(
        root=root, feature_names=feature_names, n_classes=n_classes, nodes=nodes
    )


def _text_lines(node: TreeNode, indent: str, lines: list[str]) -> None:
    counts = ", ".join(str(int(c)) for c in node.counts)
    if node.is_leaf:
        lines.append(
            f"{indent}|--- class: {node.leaf_class} (n={node.n_rows}, counts=[{counts}])"
        )
        return
    lines.append(
        f"{indent}|--- {node.attribute} <= {node.threshold:g} "
        f"(n={node.n_rows}, counts=[{counts}])"
    )
    _text_lines(node.left, indent + "|   ", lines)
    lines.append(f"{indent}|--- {node.attribute} > {node.threshold:g}")
    _text_lines(node.right, indent + "|   ", lines)


def export_tree(tree: DecisionTree, directory: Path | str) -> tuple[Path, Path]:
    """Write ``tree.txt`` (indented splits) and ``tree.csv`` (node table)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    txt_path = directory / "tree.txt"
    csv_path = directory / "tree.csv"

    lines: list[str] = []
    if tree.root.is_leaf:
        counts = ", ".join(str(int(c)) for c in tree.root.counts)
        lines.append(
            f"class: {tree.root.leaf_class} (n={tree.root.n_rows}, counts=[{counts}])"
        )
    else:
        _text_lines(tree.root, "", lines)
    txt_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    with open(csv_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        header = ["node_id", "depth", "kind", "attribute", "threshold", "left_id",
                  "right_id", "leaf_class", "entropy"]
        header += [f"count_{c}" for c in range(tree.n_classes)]
        writer.writerow(header)
        for node in tree.nodes:
            if node.is_leaf:
                row = [node.node_id, node.depth, "leaf", "", "", "", "",
                       node.leaf_class, repr(node.node_entropy)]
            else:
                row = [node.node_id, node.depth, "split", node.attribute,
                       repr(node.threshold), node.left.node_id, node.right.node_id,
                       "", repr(node.node_entropy)]
            row += [int(c) for c in node.counts]
            writer.writerow(row)
    return txt_path, csv_path
