from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cactus.classify import (
    balanced_accuracy,
    classify_pagerank,
    classify_probabilistic,
    classify_table,
    confusion_matrix,
    evaluate_kfold,
    evaluate_resubstitution,
    flip_rank,
    flip_ranks_matrix,
    marker_rank,
    rank_report,
)
from cactus.errors import DataError
from cactus.graphs import WeightedGraph
from cactus.kgraph import KnowledgeGraph
from conftest import make_table


def recall_oracle(truth, predicted, n_classes):
    """Independent recomputation through an explicit confusion matrix."""
    matrix = np.zeros((n_classes, n_classes))
    for t, p in zip(truth, predicted):
        matrix[t, p] += 1
    recalls = matrix.diagonal() / matrix.sum(axis=1)
    return recalls.mean()


class TestProbabilisticScorer:
    def test_single_flip_argmax(self):
        probs = {(0, "f"): 0.9, (1, "f"): 0.1}
        assert classify_probabilistic(["f"], probs, 1e-9) == 0

    def test_tie_goes_to_smallest_class(self):
        probs = {(0, "f"): 0.4, (1, "f"): 0.4}
        assert classify_probabilistic(["f"], probs, 1e-9) == 0

    def test_epsilon_floors_zero_probabilities(self):
        probs = {(0, "f"): 0.0, (0, "g"): 0.9, (1, "f"): 0.5, (1, "g"): 0.3}
        # with the floor, class 0 scores eps + 0.9 > 0.8
        assert classify_probabilistic(["f", "g"], probs, 1e-9) == 0

    def test_empty_record_uses_default_or_raises(self):
        probs = {(0, "f"): 0.5, (1, "f"): 0.5}
        assert classify_probabilistic([], probs, 1e-9, default=1) == 1
        with pytest.raises(DataError, match="no active flips"):
            classify_probabilistic([], probs, 1e-9)


class TestPagerankScorer:
    def make_graphs(self, corrected0, corrected1):
        graphs = []
        for class_index, corrected in ((0, corrected0), (1, corrected1)):
            graph = WeightedGraph(list(corrected))
            graphs.append(
                KnowledgeGraph(
                    class_index=class_index,
                    graph=graph,
                    probability={},
                    edge_kind={},
                    pagerank={},
                    corrected=corrected,
                )
            )
        return graphs

    def test_one_sided_evidence(self):
        graphs = self.make_graphs({}, {"f": 0.7})
        assert classify_pagerank(["f"], graphs) == 1

    def test_symmetric_scores_tie_to_class_zero(self):
        graphs = self.make_graphs({"f": 0.5}, {"f": 0.5})
        assert classify_pagerank(["f"], graphs) == 0


class TestBalancedAccuracy:
    def test_perfect_predictions(self):
        truth = np.array([0, 1, 2, 0, 1, 2])
        assert balanced_accuracy(truth, truth, 3) == 1.0

    def test_worked_example(self):
        truth = np.array([0, 0, 0, 0, 1, 1, 1])
        predicted = np.array([0, 0, 1, 1, 1, 1, 1])
        assert balanced_accuracy(truth, predicted, 2) == pytest.approx(0.75)

    def test_balanced_classes_equal_plain_accuracy(self):
        rng = np.random.default_rng(3)
        truth = np.array([0, 1] * 50)
        predicted = rng.integers(0, 2, 100)
        assert balanced_accuracy(truth, predicted, 2) == pytest.approx(
            (predicted == truth).mean()
        )

    def test_empty_class_aborts(self):
        with pytest.raises(DataError, match="class 2"):
            balanced_accuracy(np.array([0, 1]), np.array([0, 1]), 3)

    @given(st.data())
    @settings(max_examples=80)
    def test_matches_confusion_matrix_oracle(self, data):
        n_classes = data.draw(st.integers(2, 4))
        n = data.draw(st.integers(n_classes, 60))
        truth = np.array(
            list(range(n_classes))
            + data.draw(st.lists(st.integers(0, n_classes - 1),
                                 min_size=n, max_size=n))
        )
        predicted = np.array(
            data.draw(st.lists(st.integers(0, n_classes - 1),
                               min_size=len(truth), max_size=len(truth)))
        )
        got = balanced_accuracy(truth, predicted, n_classes)
        assert got == pytest.approx(recall_oracle(truth, predicted, n_classes))


class TestRanks:
    def test_identical_probabilities_rank_zero(self):
        probs = {(0, "f"): 0.4, (1, "f"): 0.4}
        assert flip_rank("f", probs, 2) == 0.0

    def test_two_class_example(self):
        probs = {(0, "f"): 0.52, (1, "f"): 0.86}
        assert flip_rank("f", probs, 2) == pytest.approx(0.34)

    def test_three_class_example(self):
        probs = {(0, "f"): 0.0, (1, "f"): 0.5, (2, "f"): 1.0}
        assert flip_rank("f", probs, 3) == pytest.approx(2 / 3)

    def test_marker_rank_mean_identity(self):
        assert marker_rank([0.3, 0.3, 0.3]) == pytest.approx(0.3)
        assert marker_rank([0.2, 0.4]) == pytest.approx(0.3)

    @given(
        probs=st.lists(
            st.lists(st.floats(0, 1), min_size=3, max_size=3),
            min_size=2, max_size=5,
        )
    )
    @settings(max_examples=80)
    def test_bounds_and_permutation_symmetry(self, probs):
        matrix = np.array(probs)
        ranks = flip_ranks_matrix(matrix)
        assert np.all(ranks >= 0.0) and np.all(ranks <= 1.0 + 1e-12)
        permuted = matrix[::-1]
        np.testing.assert_allclose(flip_ranks_matrix(permuted), ranks, atol=1e-12)


class TestClassifyTable:
    def test_wdbc_report(self, wdbc_models):
        _, at, probs, graphs = wdbc_models
        report = classify_table(at, probs, graphs, 1e-9)
        assert report.balanced["probabilistic"] >= 0.92
        assert report.balanced["pagerank"] >= 0.91
        assert report.agreement >= 0.9
        assert report.n_empty == 0
        for method, matrix in report.confusion.items():
            assert matrix.sum(axis=1).tolist() == [357, 212]

    def test_empty_records_flagged_and_majority(self):
        table = make_table(
            {"x": [None, 1, 0, 1, 0, 1, 0, 1, 0]},
            [1, 0, 1, 0, 1, 0, 1, 0, 1],
        )
        from cactus.abstraction import abstract_table, flip_probabilities, infer_schema
        from cactus.kgraph import build_graph, score_graph

        schema = infer_schema(table)
        at = abstract_table(table, schema)
        probs = flip_probabilities(at)
        graphs = [
            score_graph(build_graph(at, c, probabilities=probs)) for c in range(2)
        ]
        report = classify_table(at, probs, graphs, 1e-9)
        assert report.n_empty == 1
        assert report.flagged_empty[0]
        # majority class is 1 (5 of 9 records)
        assert report.predictions["probabilistic"][0] == 1
        assert report.predictions["pagerank"][0] == 1

    def test_rank_report_on_wdbc(self, wdbc_models):
        schema, _, probs, _ = wdbc_models
        ranks = rank_report(probs, schema)
        ordered = ranks.markers_by_rank()
        assert ordered[0][0] == "Worst perimeter"
        assert ranks.marker_ranks["Worst perimeter"] > ranks.marker_ranks["Smoothness"]


class TestEvaluationProtocols:
    def test_resubstitution_smoke(self):
        rng = np.random.default_rng(0)
        x = np.concatenate([rng.normal(0, 1, 40), rng.normal(4, 1, 40)])
        table = make_table({"x": x.tolist()}, [0] * 40 + [1] * 40)
        report, ranks = evaluate_resubstitution(table)
        assert report.balanced["probabilistic"] > 0.9
        assert set(ranks.marker_ranks) == {"x"}

    def test_kfold_deterministic_and_reasonable(self):
        rng = np.random.default_rng(1)
        x = np.concatenate([rng.normal(0, 1, 60), rng.normal(5, 1, 60)])
        noise = rng.normal(0, 1, 120)
        table = make_table(
            {"x": x.tolist(), "noise": noise.tolist()}, [0] * 60 + [1] * 60
        )
        first = evaluate_kfold(table, k=4)
        second = evaluate_kfold(table, k=4)
        assert first == second
        assert first["balanced_accuracy_probabilistic"] > 0.85

    def test_kfold_rejects_bad_k(self):
        table = make_table({"x": [1, 2, 3, 4]}, [0, 1, 0, 1])
        with pytest.raises(DataError, match="k must be"):
            evaluate_kfold(table, k=1)


def test_confusion_matrix_row_sums():
    truth = np.array([0, 0, 1, 2, 2, 2])
    predicted = np.array([0, 1, 1, 0, 2, 2])
    matrix = confusion_matrix(truth, predicted, 3)
    assert matrix.sum(axis=1).tolist() == [2, 1, 3]
    assert matrix[2, 2] == 2
