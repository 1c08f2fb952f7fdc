from __future__ import annotations

import numpy as np
import pytest
import yaml

from cactus.config import RunConfig, load_config
from cactus.datasets import (
    THYROID_COLUMNS,
    WDBC_FEATURES,
    materialize_wdbc,
    prepare_thyroid_csv,
)
from cactus.ingest import load_table
from cactus.pipeline import run
from conftest import REPO_ROOT


class TestWdbc:
    def test_shape_and_header(self, tmp_path):
        path = materialize_wdbc(tmp_path / "wdbc.csv")
        lines = path.read_text().splitlines()
        assert len(lines) == 570
        assert lines[0].split(",")[0] == "Diagnosis"
        assert len(WDBC_FEATURES) == 30
        assert "Worst perimeter" in WDBC_FEATURES
        assert "Fractal dimension SE" in WDBC_FEATURES

    def test_repo_config_loads_it(self, wdbc_csv, tmp_path):
        config = load_config(REPO_ROOT / "configs" / "wdbc.yaml")
        assert config.input_path == wdbc_csv.resolve()
        config.output_dir = tmp_path
        table = load_table(config)
        assert table.n_rows == 569
        assert table.class_counts().tolist() == [357, 212]


def synthetic_thyroid_raw(path, n_per_class: int = 25):
    """Fake raw records in the 30-field format, all diagnosis cases covered."""
    rng = np.random.default_rng(123)
    diagnoses = (
        ["K"] * n_per_class + ["A", "B", "C", "D"] * n_per_class
        + ["E", "F", "G", "H"] * n_per_class
        + ["-", "R", "GK", "M|X"] * 3          # skipped
        + ["A|K", "K|A", "A|X"]                # dual forms
    )
    lines = []
    for i, diagnosis in enumerate(diagnoses):
        age = str(rng.integers(18, 90))
        sex = rng.choice(["F", "M", "?"], p=[0.5, 0.45, 0.05])
        flags = [rng.choice(["t", "f"], p=[0.2, 0.8]) for _ in range(14)]
        measured_pairs = []
        for _ in range(5):  # TSH, T3, TT4, T4U, FTI
            if rng.random() < 0.85:
                measured_pairs += ["t", f"{rng.uniform(0.1, 200):.2f}"]
            else:
                measured_pairs += ["f", "?"]
        if rng.random() < 0.2:
            measured_pairs += ["t", f"{rng.uniform(10, 60):.2f}"]  # TBG
        else:
            measured_pairs += ["f", "?"]
        referral = rng.choice(["SVHC", "SVI", "STMW", "other"])
        fields = [age, sex, *flags, *measured_pairs, referral,
                  f"{diagnosis}[{8400000 + i}]"]
        assert len(fields) == 30
        lines.append(",".join(fields))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


class TestThyroidPreparation:
    def test_recoding_and_skip_rules(self, tmp_path):
        raw = synthetic_thyroid_raw(tmp_path / "raw.data")
        out = prepare_thyroid_csv(raw, tmp_path / "thyroid.csv")
        lines = out.read_text().splitlines()
        assert lines[0].split(",") == THYROID_COLUMNS
        labels = [line.rsplit(",", 1)[-1] for line in lines[1:]]
        assert labels.count("") == 12           # the skipped diagnoses
        assert "0" in labels and "1" in labels and "2" in labels

    def test_field_count_mismatch_rejected(self, tmp_path):
        raw = tmp_path / "raw.data"
        raw.write_text("1,2,3\n", encoding="utf-8")
        with pytest.raises(ValueError, match="expected 30 fields"):
            prepare_thyroid_csv(raw, tmp_path / "out.csv")

    def test_repo_config_runs_on_prepared_data(self, tmp_path):
        """The shipped thyroid configuration must work end to end."""
        raw = synthetic_thyroid_raw(tmp_path / "raw.data", n_per_class=30)
        csv_path = prepare_thyroid_csv(raw, tmp_path / "thyroid.csv")
        overrides = yaml.safe_load(
            (REPO_ROOT / "configs" / "thyroid.yaml").read_text()
        )
        overrides["input_path"] = csv_path
        overrides["output_dir"] = tmp_path / "out"
        config = RunConfig(**overrides)

        table = load_table(config)
        assert table.n_classes == 3
        # kept: K block + hyper/hypo letter blocks + 3 duals; 12 skipped
        assert table.n_rows == 30 + 4 * 30 + 4 * 30 + 3
        assert table.is_numeric("Sex")
        assert not table.is_numeric("Referral_source")

        manifest = run(config)
        assert manifest.ok
        assert {r.binarisation for r in manifest.configurations} == {
            "original", "div0", "div1"
        }
