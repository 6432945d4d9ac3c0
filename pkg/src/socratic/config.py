"""Runtime configuration for the dialogue service and CLI.

Values resolve in three layers: dataclass defaults, then a JSON config
file, then ``SOCRATIC_*`` environment variables. The resolved config is
serializable so every run can log exactly what it used.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Mapping


class ConfigError(Exception):
    """Bad configuration value or unreadable config file."""


@dataclass(frozen=True)
class ServiceConfig:
    """Everything the service needs to come up."""

    exercises_path: str = "data/exercises.jsonl"
    question_bank_path: str | None = None
    interactions_path: str = "data/interactions.jsonl"
    reranker_model_path: str | None = None
    templates_path: str | None = None
    embedding_backend: str = "stub"
    embedding_dim: int = 256
    embedding_seed: int = 0
    tau: float = 0.8
    tau_checker: float = 0.8
    k: int = 3
    max_attempts: int = 3
    feedback_model_label: str = "question_based"
    host: str = "127.0.0.1"
    port: int = 8000

    def validate(self) -> "ServiceConfig":
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError("tau must be in (0, 1]")
        if not 0.0 < self.tau_checker <= 1.0:
            raise ConfigError("tau_checker must be in (0, 1]")
        if self.k < 1:
            raise ConfigError("k must be at least 1")
        if self.max_attempts < 1:
            raise ConfigError("max_attempts must be at least 1")
        if not 0 < self.port < 65536:
            raise ConfigError("port must be a valid TCP port")
        if self.embedding_dim < 8:
            raise ConfigError("embedding_dim must be at least 8")
        if self.embedding_backend != "stub":
            raise ConfigError(
                f"unknown embedding backend {self.embedding_backend!r}; only "
                "'stub' ships in-process, real encoders plug in via the library API"
            )
        return self

    def to_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


_ENV_PREFIX = "SOCRATIC_"
_INT_FIELDS = {"embedding_dim", "embedding_seed", "k", "max_attempts", "port"}
_FLOAT_FIELDS = {"tau", "tau_checker"}


def _coerce(name: str, raw: str) -> Any:
    try:
        if name in _INT_FIELDS:
            return int(raw)
        if name in _FLOAT_FIELDS:
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"cannot parse {name} from {raw!r}") from exc
    return raw


def load_config(
    path: str | Path | None = None, env: Mapping[str, str] | None = None
) -> ServiceConfig:
    """Resolve the config: defaults, then file values, then env overrides.

    ``path`` may be omitted, in which case SOCRATIC_CONFIG names the file
    if set. Unknown keys in the file are rejected so typos surface early.
    """
    env = os.environ if env is None else env
    config = ServiceConfig()
    known = {f.name for f in fields(ServiceConfig)}

    if path is None and env.get(_ENV_PREFIX + "CONFIG"):
        path = env[_ENV_PREFIX + "CONFIG"]
    if path is not None:
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(payload, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(payload) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        config = replace(config, **payload)

    overrides: dict[str, Any] = {}
    for name in known:
        raw = env.get(_ENV_PREFIX + name.upper())
        if raw is not None:
            overrides[name] = _coerce(name, raw)
    if overrides:
        config = replace(config, **overrides)
    return config.validate()
