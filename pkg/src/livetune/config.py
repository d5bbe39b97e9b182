"""Service configuration.

Loaded from a YAML file (path given explicitly or via the APP_CONFIG environment
variable). Credentials never live in the file: teacher/search API keys come from
TEACHER_API_KEY and SEARCH_API_KEY.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml


@dataclass
class EndpointConfig:
    mode: str = "fixture"          # "fixture" or "http"
    endpoint: str = ""
    transcript: str = ""           # fixture transcript path (fixture mode)
    api_key_env: str = ""


@dataclass
class DatagenConfig:
    chunk_size: int = 1000
    chunk_overlap: int = 200
    n_target: int = 100
    backtranslation_threshold: float = 0.7
    dedupe_threshold: float = 0.8
    search_k: int = 5


@dataclass
class ModerationConfig:
    blocklist: str = ""            # path, one term or re: pattern per line
    max_output_chars: int = 4000
    classifier_threshold: float | None = None


@dataclass
class ProfileConfig:
    learning_rate: float
    epochs: int
    batch_size: int = 4


@dataclass
class TrainerConfig:
    backend: str = "mock"          # "mock" or "tiny"
    profiles: dict[str, ProfileConfig] = field(
        default_factory=lambda: {
            "OT": ProfileConfig(learning_rate=2e-5, epochs=10),
            "SFT": ProfileConfig(learning_rate=2e-6, epochs=2),
        }
    )
    mock_seconds_per_unit: float = 1e-4
    tiny_lr_scale: float = 100.0
    tiny_min_steps: int = 600
    tiny_seed: int = 0


@dataclass
class AppConfig:
    data_dir: str = "data"
    listen: str = "127.0.0.1:8801"
    base_model: str = "echo"       # "echo" or "tiny:<seed>"
    scope: str = "global"
    teacher: EndpointConfig = field(default_factory=EndpointConfig)
    search: EndpointConfig = field(default_factory=EndpointConfig)
    datagen: DatagenConfig = field(default_factory=DatagenConfig)
    moderation: ModerationConfig = field(default_factory=ModerationConfig)
    trainer: TrainerConfig = field(default_factory=TrainerConfig)

    @property
    def data_path(self) -> Path:
        return Path(self.data_dir)


def _endpoint(raw: dict[str, Any], key_env: str) -> EndpointConfig:
    return EndpointConfig(
        mode=raw.get("mode", "fixture"),
        endpoint=raw.get("endpoint", ""),
        transcript=raw.get("transcript", ""),
        api_key_env=key_env,
    )


def load_config(path: str | os.PathLike | None = None) -> AppConfig:
    """Load config from `path`, else $APP_CONFIG, else built-in defaults."""
    if path is None:
        path = os.environ.get("APP_CONFIG")
    if path is None:
        return AppConfig()

    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}

    cfg = AppConfig()
    cfg.data_dir = raw.get("data_dir", cfg.data_dir)
    api = raw.get("api", {})
    cfg.listen = api.get("listen", cfg.listen)
    cfg.base_model = raw.get("base_model", cfg.base_model)
    cfg.scope = raw.get("scope", cfg.scope)
    cfg.teacher = _endpoint(raw.get("teacher", {}), "TEACHER_API_KEY")
    cfg.search = _endpoint(raw.get("search", {}), "SEARCH_API_KEY")

    dg = raw.get("datagen", {})
    cfg.datagen = DatagenConfig(
        chunk_size=dg.get("chunk_size", 1000),
        chunk_overlap=dg.get("chunk_overlap", 200),
        n_target=dg.get("n_target", 100),
        backtranslation_threshold=dg.get("backtranslation_threshold", 0.7),
        dedupe_threshold=dg.get("dedupe_threshold", 0.8),
        search_k=dg.get("search_k", 5),
    )

    mod = raw.get("moderation", {})
    cfg.moderation = ModerationConfig(
        blocklist=mod.get("blocklist", ""),
        max_output_chars=mod.get("max_output_chars", 4000),
        classifier_threshold=mod.get("classifier_threshold"),
    )

    tr = raw.get("trainer", {})
    profiles = dict(cfg.trainer.profiles)
    for name, prof in tr.get("profiles", {}).items():
        base = profiles.get(name)
        profiles[name] = ProfileConfig(
            learning_rate=prof.get(
                "learning_rate", base.learning_rate if base else 2e-5
            ),
            epochs=prof.get("epochs", base.epochs if base else 1),
            batch_size=prof.get("batch_size", base.batch_size if base else 4),
        )
    cfg.trainer = TrainerConfig(
        backend=tr.get("backend", "mock"),
        profiles=profiles,
        mock_seconds_per_unit=tr.get("mock", {}).get("seconds_per_unit", 1e-4),
        tiny_lr_scale=tr.get("tiny", {}).get("lr_scale", 100.0),
        tiny_min_steps=tr.get("tiny", {}).get("min_steps", 600),
        tiny_seed=tr.get("tiny", {}).get("seed", 0),
    )
    return cfg
