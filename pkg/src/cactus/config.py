"""Run configuration: YAML schema, defaults, validation."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError

# A binarisation entry is either a non-negative class-index divider or the
# literal "original" (keep the labels as loaded).
Divider = int | str

_REQUIRED_KEYS = ("input_path", "target_column")


@dataclass
class RunConfig:
    input_path: Path
    target_column: str
    nan_tokens: list[str] = field(default_factory=list)
    value_replacements: dict[str, dict[str, str]] = field(default_factory=dict)
    dropped_columns: list[str] = field(default_factory=list)
    forced_categorical: list[str] = field(default_factory=list)
    binarisations: list[Divider] = field(default_factory=lambda: ["original"])
    stratifications: list[str] = field(default_factory=list)
    damping: float = 0.85
    smoothing_epsilon: float = 1e-9
    edge_weight_floor: float = 0.0
    max_tree_depth: int | None = None
    output_dir: Path = Path("out")
    remove_self_loops: bool = True

    def __post_init__(self) -> None:
        self.input_path = Path(self.input_path)
        self.output_dir = Path(self.output_dir)
        if self.target_column in self.dropped_columns:
            raise ConfigError(
                f"target_column {self.target_column!r} cannot be listed in dropped_columns"
            )
        for divider in self.binarisations:
            if divider == "original":
                continue
            if isinstance(divider, bool) or not isinstance(divider, int) or divider < 0:
                raise ConfigError(
                    f"binarisations entries must be non-negative integers or "
                    f'"original", got {divider!r}'
                )
        if not self.binarisations:
            raise ConfigError("binarisations must not be empty")
        if not 0.0 < self.damping < 1.0:
            raise ConfigError(f"damping must be in (0, 1), got {self.damping}")
        if self.smoothing_epsilon <= 0.0:
            raise ConfigError(f"smoothing_epsilon must be > 0, got {self.smoothing_epsilon}")
        if self.edge_weight_floor < 0.0:
            raise ConfigError(f"edge_weight_floor must be >= 0, got {self.edge_weight_floor}")
        if self.max_tree_depth is not None and self.max_tree_depth < 1:
            raise ConfigError(f"max_tree_depth must be >= 1 or null, got {self.max_tree_depth}")
        # YAML scalars in replacement maps may arrive as ints/bools; cells are
        # compared as raw strings, so normalise both sides.
        self.value_replacements = {
            str(col): {_scalar_str(old): _scalar_str(new) for old, new in mapping.items()}
            for col, mapping in self.value_replacements.items()
        }
        self.nan_tokens = [_scalar_str(tok) for tok in self.nan_tokens]

    def snapshot(self) -> dict[str, Any]:
        """JSON-ready copy of the configuration (for the run manifest)."""
        raw = dataclasses.asdict(self)
        raw["input_path"] = str(self.input_path)
        raw["output_dir"] = str(self.output_dir)
        return raw


def _scalar_str(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def load_config(path: Path | str) -> RunConfig:
    """Parse and validate a YAML run configuration.

    Unknown keys are rejected; optional keys fall back to the documented
    defaults. Relative data/output paths are resolved against the directory
    containing the configuration file.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read configuration file {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        if mark is not None:
            raise ConfigError(
                f"YAML parse error in {path} at line {mark.line + 1}, "
                f"column {mark.column + 1}: {getattr(exc, 'problem', exc)}"
            ) from exc
        raise ConfigError(f"YAML parse error in {path}: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"configuration root must be a mapping, got {type(raw).__name__}")

    known = {f.name for f in dataclasses.fields(RunConfig)}
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown configuration key {key!r}")
    for key in _REQUIRED_KEYS:
        if key not in raw:
            raise ConfigError(f"missing required configuration key {key!r}")

    config = RunConfig(**raw)
    base = path.parent
    if not config.input_path.is_absolute():
        config.input_path = (base / config.input_path).resolve()
    if not config.output_dir.is_absolute():
        config.output_dir = (base / config.output_dir).resolve()
    return config
