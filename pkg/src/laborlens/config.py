"""Configuration: one YAML file, every field overridable from the command line.

Relative paths are resolved against the config file's directory (or the
working directory when running on pure defaults). Credentials never live
in the file. Only the names of environment variables do.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

__all__ = [
    "Config",
    "TextModelSettings",
    "NewsSearchSettings",
    "AnswerProviderSettings",
    "MiningSettings",
    "TemporalSettings",
    "ServiceSettings",
    "load_config",
    "apply_overrides",
    "config_to_mapping",
]


@dataclass
class TextModelSettings:
    kind: str = "stub"  # stub | http
    endpoint: str = ""
    credential_env: str = "LABORLENS_TEXT_MODEL_TOKEN"
    stub_completion: str = (
        "debt bondage\nchild labour\nhuman trafficking\nwage withholding\nmigrant worker exploitation"
    )


@dataclass
class NewsSearchSettings:
    endpoint: str = "http://127.0.0.1:8787/search"
    credential_env: str = "LABORLENS_NEWS_TOKEN"
    page_size: int = 20
    max_results: int = 100
    min_request_interval: float = 0.0
    max_retries: int = 2


@dataclass
class AnswerProviderSettings:
    kind: str = "keyword"  # keyword | text-model | scripted
    answers_file: str = ""


@dataclass
class MiningSettings:
    max_size: int = 7
    max_vars: int = 3
    top_k: int = 20
    operators: tuple[str, ...] = ("not", "and", "or", "implies")
    workers: int = 1


@dataclass
class TemporalSettings:
    bounds: tuple[int, ...] = (0, 1, 2, 3, 5, 10)
    max_depth: int = 2
    top_k: int = 20
    workers: int = 1


@dataclass
class ServiceSettings:
    host: str = "127.0.0.1"
    port: int = 8099
    ui_assets: str = "frontend/dist"
    annotator: str = "annotator"


@dataclass
class Config:
    corpus: str = "corpus.jsonl"
    tree: str = ""  # empty: embedded default tree
    schema: str = ""  # empty: embedded default schema
    incidents: str = "incidents.csv"
    traces: str = "traces.jsonl"
    reports_dir: str = "reports"
    threshold: float = 0.5
    text_model: TextModelSettings = field(default_factory=TextModelSettings)
    news_search: NewsSearchSettings = field(default_factory=NewsSearchSettings)
    answer_provider: AnswerProviderSettings = field(default_factory=AnswerProviderSettings)
    mining: MiningSettings = field(default_factory=MiningSettings)
    temporal: TemporalSettings = field(default_factory=TemporalSettings)
    service: ServiceSettings = field(default_factory=ServiceSettings)


_PATH_FIELDS = ("corpus", "tree", "schema", "incidents", "traces", "reports_dir")


def _coerce(value: Any, template: Any, path: str) -> Any:
    if isinstance(template, bool):
        if isinstance(value, bool):
            return value
        if str(value).lower() in ("true", "1", "yes"):
            return True
        if str(value).lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"config {path}: expected a boolean, got {value!r}")
    if isinstance(template, int) and not isinstance(template, bool):
        return int(value)
    if isinstance(template, float):
        return float(value)
    if isinstance(template, tuple):
        if isinstance(value, str):
            parts = [p.strip() for p in value.split(",") if p.strip()]
        elif isinstance(value, (list, tuple)):
            parts = list(value)
        else:
            raise ValueError(f"config {path}: expected a list, got {value!r}")
        element = template[0] if template else ""
        return tuple(_coerce(p, element, path) for p in parts)
    return str(value)


def _merge(instance: Any, data: Mapping, path: str = "") -> Any:
    values = {}
    known = {f.name: f for f in dataclasses.fields(instance)}
    for key in data:
        if key not in known:
            raise ValueError(f"unknown config key {path + key!r}")
    for name, f in known.items():
        current = getattr(instance, name)
        if name not in data:
            values[name] = current
        elif dataclasses.is_dataclass(current):
            sub = data[name]
            if not isinstance(sub, Mapping):
                raise ValueError(f"config {path + name}: expected a mapping")
            values[name] = _merge(current, sub, path=f"{path}{name}.")
        else:
            values[name] = _coerce(data[name], current, path + name)
    return type(instance)(**values)


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Fold 'a.b=c' strings into the raw mapping; values stay strings and
    are coerced during the merge."""
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"override {item!r} is not KEY=VALUE")
        key, value = item.split("=", 1)
        node = raw
        parts = key.strip().split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ValueError(f"override {key!r} conflicts with a scalar config value")
        node[parts[-1]] = value
    return raw


def _validate(config: Config) -> None:
    if not 0.0 <= config.threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {config.threshold}")
    if config.mining.max_size < 1 or config.mining.max_vars < 1 or config.mining.top_k < 1:
        raise ValueError("mining.max_size, mining.max_vars and mining.top_k must be positive")
    if config.mining.workers < 1 or config.temporal.workers < 1:
        raise ValueError("worker counts must be positive")
    if config.temporal.max_depth < 0 or config.temporal.top_k < 1:
        raise ValueError("temporal.max_depth must be >= 0 and temporal.top_k positive")


def _resolve_paths(config: Config, base: Path) -> Config:
    updates: dict[str, Any] = {}
    for name in _PATH_FIELDS:
        value = getattr(config, name)
        if value and not Path(value).is_absolute():
            updates[name] = str(base / value)
    service = config.service
    if service.ui_assets and not Path(service.ui_assets).is_absolute():
        service = dataclasses.replace(service, ui_assets=str(base / service.ui_assets))
        updates["service"] = service
    return dataclasses.replace(config, **updates) if updates else config


def load_config(path: str | None, overrides: list[str] | None = None, require: bool = False) -> Config:
    """Read the YAML file (if present), apply overrides, validate, resolve paths."""
    import yaml

    raw: dict = {}
    base = Path.cwd()
    if path:
        file_path = Path(path)
        if file_path.exists():
            loaded = yaml.safe_load(file_path.read_text(encoding="utf-8"))
            if loaded is None:
                loaded = {}
            if not isinstance(loaded, dict):
                raise ValueError(f"config file {path} must contain a mapping")
            raw = loaded
            base = file_path.resolve().parent
        elif require:
            raise FileNotFoundError(f"config file not found: {path}")
    raw = apply_overrides(raw, list(overrides or ()))
    config = _merge(Config(), raw)
    _validate(config)
    return _resolve_paths(config, base)


def config_to_mapping(config: Config) -> dict:
    def unpack(value):
        if dataclasses.is_dataclass(value):
            return {f.name: unpack(getattr(value, f.name)) for f in dataclasses.fields(value)}
        if isinstance(value, tuple):
            return list(value)
        return value

    return unpack(config)
