"""Experiment configuration: a flat key=value file, overridden by flags."""
from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

SEED_ENV = "IFSLAB_SEED"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    # None means "the command's own default" (const:0.5, or 1-x for drift)
    weight: str | None = None
    alpha: float = 1.0
    grid_size: int = 2000
    n_cells: int = 1000
    n_chains: int = 10_000
    n_steps: int = 200
    burn_in: int = 100
    seed: int = 0
    out: str = "."
    threads: int = 1
    x0: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.grid_size < 16:
            raise ConfigError("grid_size must be at least 16")
        if self.n_cells < 8:
            raise ConfigError("n_cells must be at least 8")
        if self.n_chains < 1:
            raise ConfigError("n_chains must be positive")
        if self.n_steps < 1:
            raise ConfigError("n_steps must be positive")
        if self.burn_in < 0:
            raise ConfigError("burn_in must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if not 0.0 <= self.x0 <= 1.0:
            raise ConfigError(f"x0 must lie in [0, 1], got {self.x0}")

    def emit(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            lines.append(f"{f.name}={v!r}" if isinstance(v, float) else f"{f.name}={v}")
        return "\n".join(lines) + "\n"

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


# flag spellings accepted as keys in config files too
ALIASES = {"grid": "grid_size", "cells": "n_cells", "chains": "n_chains", "steps": "n_steps",
           "burn-in": "burn_in"}
_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _convert(key: str, text: str):
    kind = _TYPES[key]
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {text!r}") from None
    return text


def parse_config(text: str) -> dict:
    """Parse key=value lines into field values; blank lines and # comments are skipped."""
    out = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {number}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = ALIASES.get(key, key).replace("-", "_")
        if key not in _TYPES:
            raise ConfigError(f"line {number}: unknown key {key!r}")
        out[key] = _convert(key, value)
    return out


def from_text(text: str) -> ExperimentConfig:
    return ExperimentConfig(**parse_config(text))


def load_config(path: str | Path | None = None, env=None, **overrides) -> ExperimentConfig:
    """Defaults < IFSLAB_SEED (seed only) < config file < explicit overrides."""
    env = os.environ if env is None else env
    values = {}
    if env.get(SEED_ENV):
        values["seed"] = _convert("seed", env[SEED_ENV])
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        values.update(parse_config(text))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)
