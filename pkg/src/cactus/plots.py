"""Probability-transition plots: how each marker's flips shift across classes.

Plots are emitted as hand-built SVG so the output is byte-deterministic and
needs no plotting backend. One small-multiple per marker plus an overview
panel ordered by average rank.
"""
from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .abstraction import FlipSchema

_PALETTE = (
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e",
    "#e6ab02", "#a6761d", "#666666",
)


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def _safe_name(attribute: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", attribute)


def _panel(
    attribute: str,
    flip_names: list[str],
    series: np.ndarray,
    rank: float,
    width: float,
    height: float,
    with_legend: bool,
) -> list[str]:
    """SVG fragment for one marker panel (origin at 0,0)."""
    n_classes = series.shape[1]
    left, right, top, bottom = 46.0, 12.0, 28.0, 30.0
    plot_w = width - left - right
    plot_h = height - top - bottom

    def x_at(c: int) -> float:
        if n_classes == 1:
            return left + plot_w / 2
        return left + plot_w * c / (n_classes - 1)

    def y_at(p: float) -> float:
        return top + plot_h * (1.0 - p)

    parts = [
        f'<text x="{_fmt(width / 2)}" y="16" text-anchor="middle" '
        f'font-size="12" font-family="sans-serif">{attribute} '
        f"(avg rank {rank:.4f})</text>"
    ]
    # axes and y grid lines
    for p in (0.0, 0.5, 1.0):
        y = y_at(p)
        parts.append(
            f'<line x1="{_fmt(left)}" y1="{_fmt(y)}" x2="{_fmt(left + plot_w)}" '
            f'y2="{_fmt(y)}" stroke="#cccccc" stroke-width="0.5"/>'
        )
        parts.append(
            f'<text x="{_fmt(left - 4)}" y="{_fmt(y + 3)}" text-anchor="end" '
            f'font-size="9" font-family="sans-serif">{p:.1f}</text>'
        )
    for c in range(n_classes):
        x = x_at(c)
        parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(top + plot_h + 14)}" text-anchor="middle" '
            f'font-size="9" font-family="sans-serif">{c}</text>'
        )
    parts.append(
        f'<line x1="{_fmt(left)}" y1="{_fmt(top)}" x2="{_fmt(left)}" '
        f'y2="{_fmt(top + plot_h)}" stroke="#333333" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{_fmt(left)}" y1="{_fmt(top + plot_h)}" '
        f'x2="{_fmt(left + plot_w)}" y2="{_fmt(top + plot_h)}" '
        f'stroke="#333333" stroke-width="1"/>'
    )

    for i, name in enumerate(flip_names):
        color = _PALETTE[i % len(_PALETTE)]
        points = " ".join(
            f"{_fmt(x_at(c))},{_fmt(y_at(float(series[i, c])))}"
            for c in range(n_classes)
        )
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" '
            f'stroke-width="1.5"/>'
        )
        for c in range(n_classes):
            parts.append(
                f'<circle cx="{_fmt(x_at(c))}" cy="{_fmt(y_at(float(series[i, c])))}" '
                f'r="2" fill="{color}"/>'
            )
        if with_legend:
            ly = top + 10 + 12 * i
            parts.append(
                f'<line x1="{_fmt(left + plot_w - 60)}" y1="{_fmt(ly - 3)}" '
                f'x2="{_fmt(left + plot_w - 48)}" y2="{_fmt(ly - 3)}" '
                f'stroke="{color}" stroke-width="2"/>'
            )
            parts.append(
                f'<text x="{_fmt(left + plot_w - 44)}" y="{_fmt(ly)}" '
                f'font-size="9" font-family="sans-serif">{name}</text>'
            )
    return parts


def _svg_document(width: float, height: float, body: list[str]) -> str:
    head = (
        '<?xml version="1.0" encoding="utf-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" '
        f'height="{_fmt(height)}" viewBox="0 0 {_fmt(width)} {_fmt(height)}">'
    )
    return "\n".join([head, *body, "</svg>"]) + "\n"


def plot_distributions(
    probs: np.ndarray,
    schema: FlipSchema,
    marker_ranks: dict[str, float],
    directory: Path | str,
) -> list[Path]:
    """Write one SVG per marker plus an overview ordered by average rank."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    per_marker: dict[str, tuple[list[str], np.ndarray]] = {}
    for attr in schema.attributes:
        flips = schema.flips_of(attr)
        names = [f.display_name for f in flips]
        series = np.stack(
            [probs[:, schema.flip_index[name]] for name in names]
        )  # (n_flips, n_classes)
        per_marker[attr] = (names, series)

    for attr in schema.attributes:
        names, series = per_marker[attr]
        body = _panel(attr, names, series, marker_ranks[attr], 480, 320, True)
        path = directory / f"marker_{_safe_name(attr)}.svg"
        path.write_text(_svg_document(480, 320, body), encoding="utf-8")
        written.append(path)

    ordered = sorted(schema.attributes, key=lambda a: (-marker_ranks[a], a))
    columns = 4
    panel_w, panel_h = 240.0, 170.0
    n_rows = (len(ordered) + columns - 1) // columns
    body = []
    for i, attr in enumerate(ordered):
        names, series = per_marker[attr]
        x = (i % columns) * panel_w
        y = (i // columns) * panel_h
        body.append(f'<g transform="translate({_fmt(x)},{_fmt(y)})">')
        body.extend(_panel(attr, names, series, marker_ranks[attr], panel_w, panel_h, False))
        body.append("</g>")
    overview = directory / "markers_overview.svg"
    overview.write_text(
        _svg_document(columns * panel_w, max(1, n_rows) * panel_h, body),
        encoding="utf-8",
    )
    written.append(overview)
    return written
