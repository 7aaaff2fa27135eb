"""Simulation configuration and its file formats (``key = value`` or JSON)."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

TURNOVER_MODES = ("in_only", "total")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TradeParams:
    alpha_max: float = 2.0
    delta: float = 1.0
    c_th: float = -0.5
    q: float = 1.0
    w: float = 1.0
    turnover_mode: str = "total"

    def __post_init__(self):
        if self.alpha_max <= 0 or self.delta <= 0 or self.w <= 0 or self.q <= 0:
            raise ConfigError("alpha_max, delta, w and q must be positive")
        if not -1.0 < self.c_th < 1.0:
            raise ConfigError(f"c_th must lie in (-1, 1), got {self.c_th}")
        if self.turnover_mode not in TURNOVER_MODES:
            raise ConfigError(f"turnover_mode must be one of {TURNOVER_MODES}")

    @property
    def omega(self) -> float:
        """Collapse boundary ratio: an agent collapses iff k_out < omega * k_in."""
        if self.turnover_mode == "total":
            return (1.0 + self.c_th) / (1.0 - self.c_th)
        return 1.0 + self.c_th


@dataclass(frozen=True)
class SimConfig:
    n: int = 1000
    k0: int = 1
    q: float = 1.0
    c_th: float = -0.5
    alpha_max: float = 2.0
    delta: float = 1.0
    w: float = 1.0
    turnover_mode: str = "total"
    steps: int = 200_000
    warmup: int | None = None  # None -> 10 * n
    seed: int = 0
    extra: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.n < 10:
            raise ConfigError(f"n must be >= 10, got {self.n}")
        if not 1 <= self.k0 < self.n:
            raise ConfigError(f"k0 must satisfy 1 <= k0 < n, got {self.k0}")
        if self.steps < 0 or (self.warmup is not None and self.warmup < 0):
            raise ConfigError("steps and warmup must be non-negative")
        self.trade_params()  # validates the physics parameters

    @property
    def warmup_steps(self) -> int:
        return 10 * self.n if self.warmup is None else self.warmup

    def trade_params(self) -> TradeParams:
        return TradeParams(
            alpha_max=self.alpha_max,
            delta=self.delta,
            c_th=self.c_th,
            q=self.q,
            w=self.w,
            turnover_mode=self.turnover_mode,
        )

    def with_overrides(self, **kw) -> "SimConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d.pop("extra")
        d["warmup"] = self.warmup_steps
        return d


_FIELD_TYPES = {
    "n": int,
    "k0": int,
    "q": float,
    "c_th": float,
    "alpha_max": float,
    "delta": float,
    "w": float,
    "turnover_mode": str,
    "steps": int,
    "warmup": int,
    "seed": int,
}


def _coerce(key: str, value: Any) -> Any:
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    conv = _FIELD_TYPES[key]
    try:
        if conv is int:
            f = float(value)
            if not f.is_integer():
                raise ValueError
            return int(f)
        return conv(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc


def parse_config_text(text: str) -> dict[str, Any]:
    stripped = text.lstrip()
    if stripped.startswith("{"):
        raw = json.loads(text)
    else:
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key = value")
            k, v = line.split("=", 1)
            raw[k.strip()] = v.strip().strip('"').strip("'")
    return {k: _coerce(k, v) for k, v in raw.items()}


def load_config(path: str | Path, **overrides) -> SimConfig:
    path = Path(path)
    values = parse_config_text(path.read_text())
    values.update({k: v for k, v in overrides.items() if v is not None})
    return SimConfig(**values)


def dump_config(cfg: SimConfig, path: str | Path) -> None:
    lines = [f"{k} = {v}" for k, v in cfg.to_dict().items()]
    Path(path).write_text("\n".join(lines) + "\n")


CONFIG_KEYS = tuple(f.name for f in fields(SimConfig) if f.name != "extra")
