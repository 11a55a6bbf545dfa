"""Flat training/model configuration with JSON persistence and ``key=value`` overrides."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

FUSIONS = ("mln", "cat", "add")
FUTURE_INITS = ("endpoints", "trajectory", "random")
WINNER_RULES = ("ade", "score")


@dataclass
class TrainConfig:
    # optimisation
    lr: float = 2e-4
    weight_decay: float = 1e-4
    epochs: int = 20
    batch_size: int = 8
    max_steps: int | None = None
    grad_clip: float = 5.0
    seed: int = 0
    # loss balancing
    lambda_map_curr: float = 10.0
    lambda_map_fut: float = 0.1
    lambda_traj: float = 1.0
    winner: str = "ade"
    # architecture
    iterations: int = 2
    num_modes: int = 16
    channels: int = 64
    grid_size: int = 64
    bev_tokens: int = 8
    heads: int = 4
    world_model_layers: int = 2
    planner_layers: int = 1
    ffn_mult: int = 2
    # ablation switches
    future_bev: bool = True
    decoupled: bool = True
    fusion: str = "mln"
    future_init: str = "endpoints"
    future_steps: list = field(default_factory=lambda: [4.0])
    per_iteration_weights: bool = False
    cross_mode_attention: bool = False
    shared_ego_decoder: bool = False

    def validate(self) -> "TrainConfig":
        if not self.lr > 0:
            raise ConfigError("lr must be > 0")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if self.num_modes < 2:
            raise ConfigError("num_modes must be >= 2")
        if self.batch_size < 1 or self.epochs < 0:
            raise ConfigError("batch_size must be >= 1 and epochs >= 0")
        if self.grid_size % self.bev_tokens:
            raise ConfigError("grid_size must be a multiple of bev_tokens")
        if self.channels % self.heads:
            raise ConfigError("channels must be divisible by heads")
        if self.fusion not in FUSIONS:
            raise ConfigError(f"fusion must be one of {FUSIONS}")
        if self.future_init not in FUTURE_INITS:
            raise ConfigError(f"future_init must be one of {FUTURE_INITS}")
        if self.winner not in WINNER_RULES:
            raise ConfigError(f"winner must be one of {WINNER_RULES}")
        steps = [float(s) for s in self.future_steps]
        if not steps or steps != sorted(steps) or steps[-1] != 4.0 or any(s <= 0 or (2 * s) % 1 for s in steps):
            raise ConfigError("future_steps must be increasing multiples of 0.5 s ending at 4.0")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d).validate()

    def replace(self, **kw) -> "TrainConfig":
        return TrainConfig.from_dict({**self.to_dict(), **kw})

    def hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


def _coerce(name: str, raw: str, default):
    try:
        value = json.loads(raw)
    except ValueError:
        value = raw
    if isinstance(default, bool):
        if isinstance(value, str) and value.lower() in ("on", "off", "true", "false", "yes", "no"):
            value = value.lower() in ("on", "true", "yes")
        if not isinstance(value, bool):
            raise ConfigError(f"{name} expects a boolean, got {raw!r}")
    elif isinstance(default, float) and isinstance(value, int):
        value = float(value)
    elif isinstance(default, list) and not isinstance(value, list):
        value = [float(v) for v in str(raw).replace("-", ",").split(",") if v]
    elif default is not None and not isinstance(value, type(default)):
        raise ConfigError(f"{name} expects {type(default).__name__}, got {raw!r}")
    return value


def apply_overrides(cfg: TrainConfig, overrides) -> TrainConfig:
    """Apply ``key=value`` strings; values are parsed as JSON when possible."""
    d = cfg.to_dict()
    defaults = TrainConfig().to_dict()
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        key = key.strip()
        if key not in d:
            raise ConfigError(f"unknown config key {key!r}")
        d[key] = _coerce(key, raw.strip(), defaults[key])
    return TrainConfig.from_dict(d)


def load_config(path) -> TrainConfig:
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, ValueError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    return TrainConfig.from_dict(d)


def save_config(cfg: TrainConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
