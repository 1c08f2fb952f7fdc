from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from cactus.abstraction import abstract_table, flip_probabilities, infer_schema
from cactus.config import RunConfig
from cactus.datasets import materialize_wdbc
from cactus.ingest import DataTable, load_table
from cactus.kgraph import build_graph, score_graph

REPO_ROOT = Path(__file__).resolve().parents[1]
DATA_DIR = REPO_ROOT / "data"


def make_table(
    columns: dict[str, list],
    labels: list[int],
    label_name: str = "label",
) -> DataTable:
    """Small in-memory table; numeric columns from floats/ints, token columns
    from strings, None for missing cells."""
    frame = pd.DataFrame(index=range(len(labels)))
    for name, values in columns.items():
        has_string = any(isinstance(v, str) for v in values)
        if has_string:
            frame[name] = pd.Series(values, dtype=object)
        else:
            frame[name] = pd.Series(
                [np.nan if v is None else float(v) for v in values], dtype=float
            )
    arr = np.asarray(labels, dtype=np.int64)
    return DataTable(
        features=frame,
        labels=arr,
        n_classes=int(arr.max()) + 1,
        label_name=label_name,
    )


@pytest.fixture(scope="session")
def wdbc_csv() -> Path:
    path = DATA_DIR / "wdbc.csv"
    if not path.exists():
        materialize_wdbc(path)
    return path


@pytest.fixture(scope="session")
def wdbc_config(wdbc_csv, tmp_path_factory) -> RunConfig:
    return RunConfig(
        input_path=wdbc_csv,
        target_column="Diagnosis",
        value_replacements={"Diagnosis": {"B": "0", "M": "1"}},
        output_dir=tmp_path_factory.mktemp("wdbc-out"),
    )


@pytest.fixture(scope="session")
def wdbc_table(wdbc_config) -> DataTable:
    return load_table(wdbc_config)


@pytest.fixture(scope="session")
def wdbc_models(wdbc_table):
    """Schema, abstract table, probabilities, and scored graphs for reuse."""
    schema = infer_schema(wdbc_table)
    at = abstract_table(wdbc_table, schema)
    probs = flip_probabilities(at)
    graphs = [
        score_graph(build_graph(at, c, probabilities=probs))
        for c in range(at.n_classes)
    ]
    return schema, at, probs, graphs
