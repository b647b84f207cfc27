"""Run configuration: JSON documents mapped onto validated dataclasses.

Every section is checked for unknown keys and missing required fields before
anything runs, and every error names the offending field by its dotted path.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

from .driver import DriverConfig
from .sim import SimConfig

STRATEGIES = ("vwap", "pov", "is", "discrete")
FORMATS = ("trajectory", "fills", "ticks", "metrics")


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the field path."""


@dataclass(frozen=True)
class OrderSpec:
    side: str = "buy"
    total_shares: float = 1.0e6
    start_time: float = 0.0
    end_time: Optional[float] = None
    limit_price: Optional[float] = None

    def __post_init__(self):
        if self.side not in ("buy", "sell"):
            raise ValueError(f"side must be 'buy' or 'sell', got {self.side!r}")


@dataclass(frozen=True)
class VwapSpec:
    eta: float = 1.0
    q: float = 0.1
    mode: str = "symmetric"
    strict: bool = False
    history_days: int = 60

    def __post_init__(self):
        if self.mode not in ("symmetric", "quantile"):
            raise ValueError(f"mode must be 'symmetric' or 'quantile', got {self.mode!r}")
        if self.history_days < 2:
            raise ValueError("history_days must be at least 2")


@dataclass(frozen=True)
class PovSpec:
    p_min: float = 0.05
    p_tgt: float = 0.10
    p_max: float = 0.15
    strict: bool = False


@dataclass(frozen=True)
class IsSpec:
    """IS strategy settings; market parameters come from the simulator config."""

    i0: float = 0.1
    beta: float = 0.5
    aversion: float = 5.0
    eta: float = 1.0
    # log-volume mean and dispersion; default to the simulator's
    mu_z: Optional[float] = None
    sigma_z: Optional[float] = None
    anchor: bool = False
    history_days: int = 60


@dataclass(frozen=True)
class DiscreteSpec:
    n_bins: int = 13
    coordinate: str = "volume"
    # "linear": lagged linear bands in volume time; "vwap": profile bands
    bands: str = "linear"
    eta: float = 1.0
    history_days: int = 60

    def __post_init__(self):
        if self.n_bins < 1:
            raise ValueError("n_bins must be at least 1")
        if self.coordinate not in ("clock", "volume", "trade"):
            raise ValueError(f"coordinate must be clock, volume or trade, got {self.coordinate!r}")
        if self.bands not in ("linear", "vwap"):
            raise ValueError(f"bands must be 'linear' or 'vwap', got {self.bands!r}")
        if self.bands == "linear" and self.coordinate == "clock":
            raise ValueError("linear bands live in volume time; use coordinate volume or trade")


@dataclass(frozen=True)
class RunConfig:
    strategy: str
    sim: SimConfig = field(default_factory=SimConfig)
    order: OrderSpec = field(default_factory=OrderSpec)
    vwap: VwapSpec = field(default_factory=VwapSpec)
    pov: PovSpec = field(default_factory=PovSpec)
    is_: IsSpec = field(default_factory=IsSpec)
    discrete: DiscreteSpec = field(default_factory=DiscreteSpec)
    driver: DriverConfig = field(default_factory=DriverConfig)
    out: str = "out"
    formats: Tuple[str, ...] = FORMATS

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {', '.join(STRATEGIES)}, "
                             f"got {self.strategy!r}")
        bad = [f for f in self.formats if f not in FORMATS]
        if bad:
            raise ValueError(f"unknown report formats {bad}")

    def with_seed(self, seed: int) -> "RunConfig":
        return dataclasses.replace(self, sim=dataclasses.replace(self.sim, seed=seed))


@dataclass(frozen=True)
class OptimizeIsConfig:
    """Inputs of the IS optimizer. Volume-time units: one day of volume is 1."""

    x0: float
    p0: float
    v_d: float
    sigma_d: float
    beta: float
    i0: float
    aversion: float
    mu_z: float
    sigma_z: float
    eta: float = 1.0
    # (mean, std) of V_D ** -omega; computed from mu_z, sigma_z when absent
    moments: Optional[Tuple[float, float]] = None
    # centre the band durations on T_opt instead of the moment formula
    anchor: bool = False
    g0: float = 1.0
    gamma: float = 0.5

    def __post_init__(self):
        for name in ("x0", "p0", "v_d", "sigma_d", "beta", "i0", "aversion", "sigma_z"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive number, got {v!r}")
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        if self.moments is not None and len(self.moments) != 2:
            raise ValueError("moments must be [mean, std]")


PRESETS: Dict[str, Dict[str, Any]] = {
    # one million shares of a $24.70 stock trading 70M shares a day
    "paper-example": {
        "x0": 1.0e6, "p0": 24.7, "v_d": 7.0e7, "sigma_d": 0.0113, "beta": 0.5, "i0": 0.1,
        "aversion": 5.0, "mu_z": 18.0, "sigma_z": 0.4, "eta": 1.0,
        "moments": [1.3e-4, 0.4e-4], "anchor": True,
    },
}


def _build(cls, data: Any, path: str, nested: Optional[Dict[str, type]] = None):
    """Instantiate dataclass ``cls`` from ``data`` with field-level errors."""
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object, got {type(data).__name__}")
    nested = nested or {}
    fields = {f.name: f for f in dataclasses.fields(cls)}
    # ``is`` is a keyword, so the field is spelled ``is_``
    keymap = {name.rstrip("_"): name for name in fields}
    kwargs = {}
    for key, value in data.items():
        name = keymap.get(key)
        if name is None:
            raise ConfigError(f"{path}.{key}: unknown key (allowed: {', '.join(sorted(keymap))})")
        if name in nested and value is not None:
            value = _build(nested[name], value, f"{path}.{key}")
        elif isinstance(value, list):
            value = tuple(value)
        kwargs[name] = value
    for name, f in fields.items():
        if (name not in kwargs and f.default is dataclasses.MISSING
                and f.default_factory is dataclasses.MISSING):
            raise ConfigError(f"{path}.{name.rstrip('_')}: missing required field")
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


_RUN_SECTIONS = {"sim": SimConfig, "order": OrderSpec, "vwap": VwapSpec, "pov": PovSpec,
                 "is_": IsSpec, "discrete": DiscreteSpec, "driver": DriverConfig}


def parse_run_config(data: Any) -> RunConfig:
    return _build(RunConfig, data, "config", _RUN_SECTIONS)


def parse_optimize_config(data: Any) -> OptimizeIsConfig:
    return _build(OptimizeIsConfig, data, "config")


def load_json(path) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def run_config_to_dict(cfg: RunConfig) -> dict:
    d = dataclasses.asdict(cfg)
    d["is"] = d.pop("is_")
    d["formats"] = list(cfg.formats)
    return d


__all__ = [
    "ConfigError", "OrderSpec", "VwapSpec", "PovSpec", "IsSpec", "DiscreteSpec", "RunConfig",
    "OptimizeIsConfig", "PRESETS", "parse_run_config", "parse_optimize_config", "load_json",
    "run_config_to_dict", "STRATEGIES", "FORMATS",
]
