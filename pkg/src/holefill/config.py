"""Job configuration: one declarative JSON file, flat keys, flag overrides.

Checked-in configs keep experiments reproducible; command-line overrides
(which win) cover exploration. Every report embeds the fully resolved
config so the numbers carry the decisions that produced them.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

__all__ = ["ConfigError", "JobConfig", "load_config", "CACHE_DIR_ENV"]

CACHE_DIR_ENV = "HOLEFILL_CACHE_DIR"

DEFAULT_MEASURES = ["SDCG@10", "WP@10", "RBP(p=0.8)"]


class ConfigError(Exception):
    """Bad configuration or usage; maps to exit code 2."""


@dataclass
class JobConfig:
    # input paths
    corpus: str | None = None
    corpus_format: str = "tsv"
    queries: str | None = None
    queries_format: str = "tsv"
    embeddings: str | None = None
    qrels: str | None = None
    full_qrels: str | None = None
    baseline_run: str | None = None
    run_dir: str | None = None
    runs: list[str] = field(default_factory=list)
    cache: str | None = None
    # labeling
    labeler: str = "zero"
    maxrep_k: int = 128
    pin_examined_nonrelevant: bool = False
    # pooling
    rel_threshold: int = 2
    hole_depth: int = 10
    # measures & meta-evaluation
    measures: list[str] = field(default_factory=lambda: list(DEFAULT_MEASURES))
    alpha: float = 0.05
    rbo_p: float = 0.9
    correction: str = "bonferroni"
    top_from_full: bool = False
    # outputs
    output_dir: str = "out"

    def resolved_cache_path(self) -> str | None:
        """Cache path, honoring the cache-directory override variable."""
        if self.cache is None:
            return None
        override = os.environ.get(CACHE_DIR_ENV)
        if override:
            return str(Path(override) / Path(self.cache).name)
        return self.cache

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELD_TYPES = {f.name: f for f in dataclasses.fields(JobConfig)}


def _coerce(name: str, value: object) -> object:
    """Coerce a JSON/flag value to the config field's type."""
    if value is None:
        return None
    if name in ("runs", "measures"):
        if isinstance(value, str):
            return [v for v in (s.strip() for s in value.split(",")) if v]
        if isinstance(value, list):
            return [str(v) for v in value]
        raise ConfigError(f"config key {name!r} must be a list or comma-separated string")
    default = _FIELD_TYPES[name].default
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        if isinstance(value, str):
            if value.lower() in ("true", "1", "yes"):
                return True
            if value.lower() in ("false", "0", "no"):
                return False
        raise ConfigError(f"config key {name!r} must be a boolean, got {value!r}")
    if isinstance(default, int) and not isinstance(default, bool):
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"config key {name!r} must be an integer, got {value!r}") from None
    if isinstance(default, float):
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"config key {name!r} must be a number, got {value!r}") from None
    return str(value)


def load_config(path: str | None = None, overrides: dict[str, object] | None = None) -> JobConfig:
    """Read the config file (if any) and apply overrides on top."""
    data: dict[str, object] = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            loaded = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        data.update(loaded)
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    unknown = set(data) - set(_FIELD_TYPES)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    coerced = {k: _coerce(k, v) for k, v in data.items()}
    return JobConfig(**coerced)
