"""Pipeline configuration.

Config files are plain YAML mappings onto PipelineConfig fields. Environment
variables are interpolated only inside the remote-backend credential fields
(`${VAR}` syntax), and the config hash is computed over the raw placeholders
so secrets never leak into manifests. The hash covers every field that
shapes corpus content; parallelism and output paths are excluded so the same
corpus can be produced anywhere.
"""

from __future__ import annotations

import hashlib
import os
import re
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import yaml

from .chartspec import CHART_TYPES, DEFAULT_CHART_TYPES, DEFAULT_TOPICS, TOPICS
from .model import canonical_json


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RemoteConfig:
    endpoint: str = "${CHARTFORGE_ENDPOINT}"
    api_key: str = "${CHARTFORGE_API_KEY}"
    model: str = "gpt-4o"
    temperature: float = 0.2
    timeout: float = 120.0
    replay_file: str = "remote_replay.jsonl"


@dataclass(frozen=True)
class PipelineConfig:
    chart_types: tuple[str, ...] = tuple(DEFAULT_CHART_TYPES)
    scripts_per_type: int = 400
    data_per_type: int = 1000
    topics: tuple[str, ...] = tuple(DEFAULT_TOPICS)
    seed: int = 0
    out_dir: str = "out"
    backend: str = "offline"
    jobs: int = field(default_factory=lambda: os.cpu_count() or 1)
    plot_backend_name: str = "matplotlib"
    retry_budget: int = 3
    unannotated_fraction: float = 0.5
    data_floor: float = 0.8
    render_timeout: float = 30.0
    render_ok_floor: float = 0.7
    ocr_threshold: float = 0.6
    blend_weights: tuple[tuple[str, float], ...] = (
        ("general", 2.0),
        ("data_driven", 1.0),
        ("json_only", 1.0),
    )
    benchmark_quota: int = 10_000
    tolerance: float = 0.05
    remote: RemoteConfig = field(default_factory=RemoteConfig)

    def validate(self) -> list[str]:
        problems = []
        if self.scripts_per_type < 1:
            problems.append("scripts_per_type must be >= 1")
        if self.data_per_type < 1:
            problems.append("data_per_type must be >= 1")
        if not self.chart_types:
            problems.append("no chart types configured")
        if self.backend == "offline":
            unknown = [t for t in self.chart_types if t not in CHART_TYPES]
            if unknown:
                problems.append(f"chart types without offline support: {unknown}")
            bad_topics = [t for t in self.topics if t not in TOPICS]
            if bad_topics:
                problems.append(f"topics without offline vocabulary: {bad_topics}")
        if self.backend not in ("offline", "remote"):
            problems.append(f"unknown backend {self.backend!r}")
        if not self.topics:
            problems.append("no topics configured")
        return problems

    def blend_weight_map(self) -> dict[str, float]:
        return dict(self.blend_weights)

    def hash_fields(self) -> dict:
        d = asdict(self)
        for volatile in ("out_dir", "jobs"):
            d.pop(volatile)
        d["remote"].pop("api_key")
        d["blend_weights"] = dict(self.blend_weights)
        return d

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(canonical_json(self.hash_fields()).encode("utf-8")).hexdigest()[:16]

    def out_path(self) -> Path:
        return Path(self.out_dir)

    def manifest_path(self, stage: str) -> Path:
        return self.out_path() / "manifests" / f"{stage}.jsonl"


_ENV_PATTERN = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")


def resolve_env(value: str) -> str:
    """Expand ${VAR} references from the environment; unset variables expand
    to the empty string."""
    return _ENV_PATTERN.sub(lambda m: os.environ.get(m.group(1), ""), value)


def load_config(path: Optional[str | Path] = None, **overrides) -> PipelineConfig:
    """Build a config from an optional YAML file plus keyword overrides.
    Unknown keys are an error rather than silently ignored."""
    raw: dict = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            loaded = yaml.safe_load(fh) or {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"{path}: config must be a mapping")
        raw.update(loaded)
    raw.update({k: v for k, v in overrides.items() if v is not None})

    remote_raw = raw.pop("remote", {})
    known = {f for f in PipelineConfig.__dataclass_fields__ if f != "remote"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if not isinstance(remote_raw, dict):
        raise ConfigError("remote section must be a mapping")
    unknown_remote = set(remote_raw) - set(RemoteConfig.__dataclass_fields__)
    if unknown_remote:
        raise ConfigError(f"unknown remote config keys: {sorted(unknown_remote)}")

    for tuple_field in ("chart_types", "topics"):
        if tuple_field in raw:
            raw[tuple_field] = tuple(raw[tuple_field])
    if "blend_weights" in raw and isinstance(raw["blend_weights"], dict):
        raw["blend_weights"] = tuple(sorted(raw["blend_weights"].items()))

    cfg = PipelineConfig(remote=RemoteConfig(**remote_raw), **raw)
    problems = cfg.validate()
    if problems:
        raise ConfigError("; ".join(problems))
    return cfg


def with_overrides(cfg: PipelineConfig, **overrides) -> PipelineConfig:
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
