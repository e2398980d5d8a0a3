"""Run configuration and its ``key = value`` file format.

One assignment per line; blank lines and ``#`` comments are ignored::

    seed = 7
    iterations = 2000
    mode = VDM
    lp_enabled = true
"""

from __future__ import annotations

import dataclasses
import enum
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

from .embedding import InjectionWeights
from .errors import ParseError, ValidationError

SEED_ENV = "CONSDIST_SEED"


class Mode(enum.Enum):
    BASELINE = "Baseline"
    PERPNEG = "PerpNeg"
    VDM = "VDM"

    @classmethod
    def parse(cls, text: str) -> "Mode":
        for m in cls:
            if m.value.lower() == text.strip().lower():
                return m
        raise ValueError(f"unknown mode {text!r}; expected one of {[m.value for m in cls]}")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 7
    iterations: int = 2000
    batch: int = 4
    kappa: float = 0.6
    weights: InjectionWeights = field(default_factory=InjectionWeights)
    beta: float = 0.8
    mode: Mode = Mode.VDM
    lp_enabled: bool = True
    bins: int = 32
    dims: int = 8
    lr: float = 0.02
    snapshot_interval: int = 100
    embed_dim: int = 16
    guidance_scale: float = 1.0
    perp_neg_weight: float = 1.0
    encoder: str = "fold"
    scene_seed: int = 0

    def __post_init__(self):
        validate(self)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def items(self) -> list[tuple[str, str]]:
        """Flat ``(key, text)`` pairs in file order, as written by the manifest."""
        out = []
        for key in _FIELDS:
            if key in ("w1", "w2", "w3"):
                value = getattr(self.weights, key)
            else:
                value = getattr(self, key)
            out.append((key, _format(value)))
        return out


_FIELDS = (
    "seed", "iterations", "batch", "kappa", "w1", "w2", "w3", "beta", "mode",
    "lp_enabled", "bins", "dims", "lr", "snapshot_interval", "embed_dim",
    "guidance_scale", "perp_neg_weight", "encoder", "scene_seed",
)
_INT_KEYS = {"seed", "iterations", "batch", "bins", "dims", "snapshot_interval", "embed_dim", "scene_seed"}
_FLOAT_KEYS = {"kappa", "w1", "w2", "w3", "beta", "lr", "guidance_scale", "perp_neg_weight"}
_ENCODERS = ("fold", "identity")


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, enum.Enum):
        return value.value
    return repr(value) if isinstance(value, float) else str(value)


def _check(cond: bool, key: str, message: str) -> None:
    if not cond:
        raise ValidationError(f"{key}: {message}", key=key)


def validate(cfg: RunConfig) -> None:
    for key in ("kappa", "beta", "lr", "guidance_scale", "perp_neg_weight"):
        _check(math.isfinite(getattr(cfg, key)), key, "must be finite")
    _check(cfg.iterations >= 1, "iterations", "must be >= 1")
    _check(cfg.batch >= 1, "batch", "must be >= 1")
    _check(not cfg.lp_enabled or cfg.batch >= 2, "batch",
           "must be >= 2 when lp_enabled is true")
    _check(cfg.kappa >= 0, "kappa", "must be >= 0")
    _check(0.0 <= cfg.beta <= 1.0, "beta", "must lie in [0, 1]")
    _check(cfg.bins >= 4, "bins", "must be >= 4")
    _check(cfg.dims >= 4, "dims", "must be >= 4")
    _check(cfg.embed_dim >= 4, "embed_dim", "must be >= 4")
    _check(cfg.lr > 0, "lr", "must be > 0")
    _check(cfg.snapshot_interval >= 1, "snapshot_interval", "must be >= 1")
    _check(cfg.guidance_scale >= 0, "guidance_scale", "must be >= 0")
    _check(cfg.perp_neg_weight >= 0, "perp_neg_weight", "must be >= 0")
    _check(cfg.encoder in _ENCODERS, "encoder", f"must be one of {_ENCODERS}")
    _check(isinstance(cfg.mode, Mode), "mode", "must be a Mode")


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "1", "yes", "on"):
        return True
    if t in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_config_text(text: str, env=None) -> RunConfig:
    """Parse config text. ``env`` defaults to ``os.environ`` for the seed override."""
    raw: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ParseError(f"line {lineno}: expected 'key = value', got {line.strip()!r}", line=lineno)
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _FIELDS:
            raise ParseError(f"line {lineno}: unknown key {key!r}", line=lineno, key=key)
        if key in raw:
            raise ParseError(f"line {lineno}: duplicate key {key!r}", line=lineno, key=key)
        if not value:
            raise ParseError(f"line {lineno}: empty value for {key!r}", line=lineno, key=key)
        raw[key] = (value, lineno)

    env = os.environ if env is None else env
    override = env.get(SEED_ENV)
    if override is not None and override.strip().lstrip("-").isdigit():
        raw["seed"] = (override.strip(), 0)

    kwargs = {}
    weights = {}
    for key, (value, lineno) in raw.items():
        try:
            if key in _INT_KEYS:
                parsed = int(value)
            elif key in _FLOAT_KEYS:
                parsed = float(value)
            elif key == "lp_enabled":
                parsed = _parse_bool(value)
            elif key == "mode":
                parsed = Mode.parse(value)
            else:
                parsed = value
        except ValueError as exc:
            raise ParseError(f"line {lineno}: bad value for {key!r}: {exc}", line=lineno, key=key) from None
        if key in ("w1", "w2", "w3"):
            weights[key] = parsed
        else:
            kwargs[key] = parsed
    if weights:
        try:
            kwargs["weights"] = InjectionWeights(**weights)
        except ValueError as exc:
            bad = next((k for k, v in weights.items() if not (math.isfinite(v) and v >= 0)), "weights")
            raise ValidationError(f"{bad}: {exc}", key=bad) from None
    return RunConfig(**kwargs)


def parse_config(path, env=None) -> RunConfig:
    text = Path(path).read_text(encoding="utf-8")
    return parse_config_text(text, env=env)
