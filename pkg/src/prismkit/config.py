"""Run configuration - Layer 1. Defaults, YAML overrides and JSON input files.

Precedence: command-line options > --config YAML file > PRISMKIT_* environment > defaults.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Literal

import yaml

from .errors import ConfigError, ParseError

logger = logging.getLogger(__name__)

DEFAULT_DEGREE = 8
DEFAULT_U_CAP = 24
DEFAULT_M_CAP = 12
DEFAULT_S_MAX = 4
DEFAULT_SNF_GUARD = 1
THREADS_ENV = "PRISMKIT_THREADS"


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return min(4, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be positive, got {n}")
    return n


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs besides its input files."""

    command: str = ""
    inputs: tuple[str, ...] = ()
    degree_cap: int = DEFAULT_DEGREE
    lambda_degree_cap: int | None = None
    u_cap: int = DEFAULT_U_CAP
    m_cap: int = DEFAULT_M_CAP
    precision: int | None = None
    n_max: int | None = None
    s_max: int = DEFAULT_S_MAX
    snf_guard: int = DEFAULT_SNF_GUARD
    output_format: Literal["text", "json"] = "text"
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        for name in ("degree_cap", "u_cap", "m_cap", "s_max", "threads"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.lambda_degree_cap is not None and self.lambda_degree_cap < 1:
            raise ConfigError("lambda_degree_cap must be positive")
        if self.snf_guard < 0:
            raise ConfigError(f"snf_guard must be non-negative, got {self.snf_guard}")
        if self.n_max is not None and self.n_max < 1:
            raise ConfigError("n_max must be positive")
        if self.precision is not None and self.precision < 2:
            raise ConfigError(f"precision must be at least 2, got {self.precision}")
        if self.output_format not in ("text", "json"):
            raise ConfigError(f"unknown output format {self.output_format!r}")

    @classmethod
    def load(cls, path: str | Path | None = None, **overrides: Any) -> RunConfig:
        """Defaults, then the YAML file, then non-None overrides."""
        values: dict[str, Any] = {"threads": default_threads()}
        if path is not None:
            values.update(read_yaml_config(path))
        values.update({k: v for k, v in overrides.items() if v is not None})
        if "inputs" in values:
            values["inputs"] = tuple(values["inputs"])
        return cls(**values)

    def with_overrides(self, **overrides: Any) -> RunConfig:
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def read_yaml_config(path: str | Path) -> dict[str, Any]:
    p = Path(path)
    try:
        data = yaml.safe_load(p.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {p}")
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ParseError(f"invalid YAML: {e}", str(p), mark.line + 1 if mark else None)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{p}: config must be a mapping")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{p}: unknown config keys {unknown}")
    logger.debug("loaded config from %s: %s", p, sorted(data))
    return data


def read_json(path: str | Path) -> Any:
    """Load a JSON input file, reporting syntax errors with their line."""
    p = Path(path)
    try:
        text = p.read_text()
    except FileNotFoundError:
        raise ParseError("file not found", str(p))
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, str(p), e.lineno)
