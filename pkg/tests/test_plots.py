from __future__ import annotations

import xml.etree.ElementTree as ET

import numpy as np

from cactus.abstraction import abstract_table, flip_probabilities, infer_schema
from cactus.classify import rank_report
from cactus.plots import plot_distributions
from conftest import make_table


def build_inputs():
    table = make_table(
        {
            "steady": [0, 1] * 8,
            "shifty": [1, 2, 3, 4, 10, 11, 12, 13] * 2,
        },
        [0, 0, 0, 0, 1, 1, 1, 1] * 2,
    )
    schema = infer_schema(table)
    at = abstract_table(table, schema)
    probs = flip_probabilities(at)
    ranks = rank_report(probs, schema)
    return schema, probs, ranks


def test_one_panel_per_marker_plus_overview(tmp_path):
    schema, probs, ranks = build_inputs()
    written = plot_distributions(probs, schema, ranks.marker_ranks, tmp_path)
    names = sorted(p.name for p in written)
    assert names == ["marker_shifty.svg", "marker_steady.svg", "markers_overview.svg"]


def test_constant_marker_title_rank_zero(tmp_path):
    schema, probs, ranks = build_inputs()
    plot_distributions(probs, schema, ranks.marker_ranks, tmp_path)
    text = (tmp_path / "marker_steady.svg").read_text()
    assert "avg rank 0.000" in text


def test_svg_parses_and_has_polylines(tmp_path):
    schema, probs, ranks = build_inputs()
    plot_distributions(probs, schema, ranks.marker_ranks, tmp_path)
    for name in ("marker_shifty.svg", "markers_overview.svg"):
        root = ET.fromstring((tmp_path / name).read_text())
        assert root.tag.endswith("svg")
        polylines = root.iter("{http://www.w3.org/2000/svg}polyline")
        assert sum(1 for _ in polylines) >= 2


def test_title_carries_marker_rank(tmp_path, wdbc_models):
    schema, _, probs, _ = wdbc_models
    ranks = rank_report(probs, schema)
    plot_distributions(probs, schema, ranks.marker_ranks, tmp_path)
    text = (tmp_path / "marker_Worst_perimeter.svg").read_text()
    expected = f"avg rank {ranks.marker_ranks['Worst perimeter']:.4f}"
    assert expected in text


def test_deterministic_output(tmp_path):
    schema, probs, ranks = build_inputs()
    a = tmp_path / "a"
    b = tmp_path / "b"
    plot_distributions(probs, schema, ranks.marker_ranks, a)
    plot_distributions(probs, schema, ranks.marker_ranks, b)
    for path in a.iterdir():
        assert path.read_bytes() == (b / path.name).read_bytes()
