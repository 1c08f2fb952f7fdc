from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cactus.abstraction import abstract_table, infer_schema
from cactus.errors import GraphError
from cactus.graphs import WeightedGraph
from cactus.kgraph import (
    KnowledgeGraph,
    build_graph,
    corrected_significance,
    export_graph,
    pagerank,
    pagerank_matrix,
    score_graph,
)
from conftest import make_table


def dense_stationary(weights: np.ndarray, damping: float = 0.85) -> np.ndarray:
    """Oracle: stationary distribution by direct linear solve."""
    n = weights.shape[0]
    out = weights.sum(axis=1)
    transition = np.zeros((n, n))
    nz = out > 0
    transition[nz] = weights[nz] / out[nz, None]
    transition[~nz] = 1.0 / n
    system = np.eye(n) - damping * transition.T
    return np.linalg.solve(system, np.full(n, (1.0 - damping) / n))


def graph_from_matrix(weights: np.ndarray) -> WeightedGraph:
    return WeightedGraph.from_matrix(weights)


class TestBuildGraph:
    def test_perfect_cooccurrence_weight_one(self):
        table = make_table(
            {"a": [0, 0, 1, 1], "b": [0, 0, 1, 1]}, [0, 0, 1, 1]
        )
        schema = infer_schema(table)
        at = abstract_table(table, schema)
        kg = build_graph(at, 0)
        assert kg.graph.weight("a_0", "b_0") == 1.0

    def test_no_edge_between_same_attribute_flips(self, wdbc_models):
        _, _, _, graphs = wdbc_models
        for kg in graphs:
            for attr in ("Area", "Smoothness"):
                assert kg.graph.weight(f"{attr}_U", f"{attr}_D") == 0.0

    def test_wdbc_benign_weights_match_nested_loop_count(self, wdbc_models):
        schema, at, _, graphs = wdbc_models
        kg = graphs[0]
        rows = np.flatnonzero(at.labels == 0)
        # brute force joint counts over the benign records
        checks = [
            ("Area_U", "Perimeter_U"), ("Smoothness_U", "Texture_D"),
            ("Worst perimeter_D", "Concavity_D"), ("Radius_U", "Symmetry_U"),
        ]
        for u, v in checks:
            iu, iv = schema.flip_index[u], schema.flip_index[v]
            both = sum(1 for r in rows if at.active[r, iu] and at.active[r, iv])
            expected = both / len(rows)  # no missing cells in this data
            assert kg.graph.weight(u, v) == pytest.approx(expected, abs=1e-12)

    def test_weight_floor_prunes_edges(self, wdbc_models):
        _, at, probs, _ = wdbc_models
        pruned = build_graph(at, 0, weight_floor=0.5, probabilities=probs)
        full = build_graph(at, 0, probabilities=probs)
        assert pruned.graph.n_edges < full.graph.n_edges
        assert all(w > 0.5 for _, _, w in pruned.graph.edges())

    def test_missing_denominator_counts_observed_pairs(self):
        table = make_table(
            {"a": [0, 0, 1, None, 0, 1], "b": [0, None, 1, 1, 0, 1]},
            [0, 0, 0, 0, 0, 1],
        )
        schema = infer_schema(table)
        at = abstract_table(table, schema)
        kg = build_graph(at, 0)
        # rows of class 0 where both observed: 0, 2, 4 -> both a_0,b_0 in rows 0,4
        assert kg.graph.weight("a_0", "b_0") == pytest.approx(2 / 3)


class TestPagerank:
    def test_complete_graph_uniform(self):
        n = 5
        weights = np.ones((n, n)) - np.eye(n)
        scores, converged = pagerank(graph_from_matrix(weights))
        assert converged
        for value in scores.values():
            assert value == pytest.approx(1 / n, abs=1e-9)

    def test_path_graph_center_dominates(self):
        graph = WeightedGraph()
        graph.add_edge("A", "B", 1.0)
        graph.add_edge("B", "C", 1.0)
        scores, _ = pagerank(graph)
        assert scores["B"] > scores["A"]
        assert scores["A"] == pytest.approx(scores["C"], abs=1e-12)

    def test_five_node_weighted_toy_matches_dense_oracle(self):
        rng = np.random.default_rng(7)
        weights = np.zeros((5, 5))
        for i in range(5):
            for j in range(i + 1, 5):
                weights[i, j] = weights[j, i] = rng.choice([0.0, 0.3, 1.2])
        scores, _ = pagerank(graph_from_matrix(weights), tol=1e-12, max_iter=500)
        expected = dense_stationary(weights)
        order = graph_from_matrix(weights).nodes
        got = np.array([scores[node] for node in order])
        np.testing.assert_allclose(got, expected, atol=1e-8)

    def test_isolated_nodes_conserve_mass(self):
        graph = WeightedGraph(["A", "B", "C", "lonely"])
        graph.add_edge("A", "B", 2.0)
        scores, converged = pagerank(graph)
        assert converged
        assert sum(scores.values()) == pytest.approx(1.0, abs=1e-9)
        assert scores["lonely"] > 0

    @given(st.data())
    @settings(max_examples=60, deadline=None)
    def test_mass_conservation_property(self, data):
        n = data.draw(st.integers(1, 7))
        weights = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                weights[i, j] = weights[j, i] = data.draw(
                    st.sampled_from([0.0, 0.5, 1.0, 2.0])
                )
        scores, _ = pagerank_matrix(weights)
        assert scores.sum() == pytest.approx(1.0, abs=1e-9)

    def test_nonconvergence_flag(self):
        weights = np.zeros((3, 3))
        weights[0, 1] = weights[1, 0] = 1.0
        weights[1, 2] = weights[2, 1] = 1.0
        _, converged = pagerank_matrix(weights, tol=1e-30, max_iter=2)
        assert not converged


class TestCorrectedSignificance:
    def test_uniform_inputs_stay_uniform(self):
        graph = WeightedGraph.from_matrix(np.ones((4, 4)) - np.eye(4))
        kg = KnowledgeGraph(
            class_index=0,
            graph=graph,
            probability={node: 0.5 for node in graph.nodes},
            edge_kind={},
        )
        score_graph(kg)
        for value in kg.corrected.values():
            assert value == pytest.approx(0.25, abs=1e-9)

    def test_zero_probability_zeroes_score(self):
        graph = WeightedGraph.from_matrix(np.ones((3, 3)) - np.eye(3))
        kg = KnowledgeGraph(
            class_index=0,
            graph=graph,
            probability={"n0": 0.0, "n1": 0.5, "n2": 0.5},
            edge_kind={},
        )
        score_graph(kg)
        assert kg.corrected["n0"] == 0.0
        assert sum(kg.corrected.values()) == pytest.approx(1.0)

    def test_all_zero_products_abort(self):
        graph = WeightedGraph.from_matrix(np.ones((3, 3)) - np.eye(3))
        kg = KnowledgeGraph(
            class_index=0,
            graph=graph,
            probability={node: 0.0 for node in graph.nodes},
            edge_kind={},
        )
        kg.pagerank, _ = pagerank(graph)
        with pytest.raises(GraphError, match="degenerate"):
            corrected_significance(kg)

    def test_wdbc_corrected_reorders_malignant_ranking(self, wdbc_models):
        # skewed probabilities shift the ranking away from raw centrality
        _, _, _, graphs = wdbc_models
        kg = graphs[1]
        order_raw = sorted(kg.pagerank, key=lambda n: (-kg.pagerank[n], n))
        order_corrected = sorted(kg.corrected, key=lambda n: (-kg.corrected[n], n))
        assert order_raw != order_corrected


class TestExportGraph:
    def test_empty_edge_graph_is_valid(self, tmp_path):
        import networkx as nx

        graph = WeightedGraph(["a", "b"])
        kg = KnowledgeGraph(
            class_index=0,
            graph=graph,
            probability={"a": 0.1, "b": 0.9},
            edge_kind={},
            pagerank={"a": 0.5, "b": 0.5},
            corrected={"a": 0.1, "b": 0.9},
        )
        graphml, edges_csv = export_graph(kg, tmp_path)
        parsed = nx.read_graphml(graphml)
        assert set(parsed.nodes) == {"a", "b"}
        assert parsed.number_of_edges() == 0
        assert edges_csv.read_text().strip() == "source,target,weight"

    def test_roundtrip_with_independent_parser(self, wdbc_models, tmp_path):
        import networkx as nx

        _, _, _, graphs = wdbc_models
        kg = graphs[0]
        graphml, _ = export_graph(kg, tmp_path)
        parsed = nx.read_graphml(graphml)
        assert set(parsed.nodes) == set(kg.graph.nodes)
        expected_edges = {(u, v) for u, v, _ in kg.graph.edges()}
        got_edges = {(min(u, v), max(u, v)) for u, v in parsed.edges()}
        assert got_edges == expected_edges
        for u, v, w in kg.graph.edges():
            assert parsed.edges[u, v]["weight"] == pytest.approx(w)
        for node in kg.graph.nodes:
            assert parsed.nodes[node]["probability"] == pytest.approx(
                kg.probability[node]
            )
            assert parsed.nodes[node]["corrected"] == pytest.approx(
                kg.corrected[node]
            )

    def test_two_files_per_class_and_determinism(self, wdbc_models, tmp_path):
        _, _, _, graphs = wdbc_models
        dir_a = tmp_path / "a"
        dir_b = tmp_path / "b"
        for kg in graphs:
            export_graph(kg, dir_a)
            export_graph(kg, dir_b)
        names = sorted(p.name for p in dir_a.iterdir())
        assert names == [
            "class_0.graphml", "class_0_edges.csv",
            "class_1.graphml", "class_1_edges.csv",
        ]
        for name in names:
            assert (dir_a / name).read_bytes() == (dir_b / name).read_bytes()
