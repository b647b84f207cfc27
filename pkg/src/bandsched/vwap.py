"""VWAP schedule targets and uncertainty bands from an intraday volume curve.

The volume curve is the cumulative fraction of the session's volume traded
by time ``t``. A :class:`VolumeProfile` holds its pointwise mean and standard
deviation (and optionally empirical quantiles) on a uniform time grid, built
from an ensemble of historical days.
"""
from __future__ import annotations

import bisect
import csv
import enum
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import BandError, BandSet

log = logging.getLogger(__name__)

# ensemble size below which empirical tail quantiles are not trusted
MIN_QUANTILE_DAYS = 20
# 78 five-minute bins over a 6.5 hour session
DEFAULT_BINS = 78
SESSION_SECONDS = 23400.0

_TOL = 1e-9


class BandMode(enum.Enum):
    SYMMETRIC = "symmetric"
    QUANTILE = "quantile"


@dataclass(frozen=True)
class VwapConfig:
    eta: float = 1.0
    q: float = 0.1
    mode: BandMode = BandMode.SYMMETRIC
    strict: bool = False

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")
        if not 0 < self.q < 0.5:
            raise ValueError(f"q must lie in (0, 0.5), got {self.q}")


@dataclass(frozen=True)
class VolumeProfile:
    grid: np.ndarray
    u_mean: np.ndarray
    u_std: np.ndarray
    u_quantile_lo: Optional[np.ndarray] = None
    u_quantile_hi: Optional[np.ndarray] = None
    q: Optional[float] = None

    def __post_init__(self):
        n = len(self.grid)
        if n < 2 or len(self.u_mean) != n or len(self.u_std) != n:
            raise ValueError("grid, u_mean and u_std must share a length >= 2")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if abs(self.u_mean[0]) > 1e-9 or abs(self.u_mean[-1] - 1) > 1e-9:
            raise ValueError("u_mean must run from 0 to 1")
        if np.any(np.diff(self.u_mean) < -_TOL):
            raise ValueError("u_mean must be non-decreasing")
        if np.any(self.u_std < 0) or self.u_std[0] > 1e-9 or self.u_std[-1] > 1e-9:
            raise ValueError("u_std must be >= 0 and vanish at both endpoints")
        if self.has_quantiles:
            if (np.any(self.u_quantile_lo > self.u_mean + _TOL)
                    or np.any(self.u_quantile_hi < self.u_mean - _TOL)):
                raise ValueError("quantile curves must bracket u_mean")
        # plain lists make scalar lookups in the driver loop cheap
        object.__setattr__(self, "_g", [float(v) for v in self.grid])
        object.__setattr__(self, "_m", [float(v) for v in self.u_mean])
        object.__setattr__(self, "_s", [float(v) for v in self.u_std])
        if self.has_quantiles:
            object.__setattr__(self, "_lo", [float(v) for v in self.u_quantile_lo])
            object.__setattr__(self, "_hi", [float(v) for v in self.u_quantile_hi])

    @property
    def has_quantiles(self) -> bool:
        return self.u_quantile_lo is not None and self.u_quantile_hi is not None

    @property
    def t0(self) -> float:
        return float(self.grid[0])

    @property
    def t1(self) -> float:
        return float(self.grid[-1])

    def _locate(self, t: float):
        g = self._g
        if t < g[0] - _TOL or t > g[-1] + _TOL:
            raise BandError(f"t={t} outside profile window [{g[0]}, {g[-1]}]")
        i = bisect.bisect_right(g, t) - 1
        if i < 0:
            i = 0
        elif i > len(g) - 2:
            i = len(g) - 2
        w = (t - g[i]) / (g[i + 1] - g[i])
        return i, (0.0 if w < 0.0 else (1.0 if w > 1.0 else w))

    def _interp(self, arr: np.ndarray, t: float) -> float:
        i, w = self._locate(t)
        return float(arr[i] + w * (arr[i + 1] - arr[i]))

    def mean_at(self, t: float) -> float:
        return self._interp(self.u_mean, t)

    def std_at(self, t: float) -> float:
        return self._interp(self.u_std, t)

    def inverse_mean(self, u: float) -> float:
        """Earliest grid time at which the mean curve reaches fraction ``u``."""
        u = min(max(u, 0.0), 1.0)
        m = self.u_mean
        j = int(np.searchsorted(m, u - 1e-12, side="left"))
        if j == 0:
            return self.t0
        j = min(j, len(m) - 1)
        du = m[j] - m[j - 1]
        w = 0.0 if du <= 0 else (u - m[j - 1]) / du
        return float(self.grid[j - 1] + w * (self.grid[j] - self.grid[j - 1]))

    def blend(self, today: Sequence[float], weight: float) -> "VolumeProfile":
        """Convex blend of the historical mean with today's observed curve.

        ``today`` is a normalized curve on the same grid. Standard deviation
        and quantile curves are left as they are.
        """
        if not 0 <= weight <= 1:
            raise ValueError("blend weight must lie in [0, 1]")
        today = np.asarray(today, dtype=float)
        mean = (1 - weight) * self.u_mean + weight * today
        lo = hi = None
        if self.has_quantiles:
            shift = mean - self.u_mean
            lo = np.minimum(self.u_quantile_lo + shift, mean)
            hi = np.maximum(self.u_quantile_hi + shift, mean)
        return VolumeProfile(self.grid, mean, self.u_std, lo, hi, self.q)

    def to_json(self) -> str:
        data = {
            "schema_version": 1,
            "grid": self.grid.tolist(),
            "u_mean": self.u_mean.tolist(),
            "u_std": self.u_std.tolist(),
            "q": self.q,
            "u_quantile_lo": None if self.u_quantile_lo is None else self.u_quantile_lo.tolist(),
            "u_quantile_hi": None if self.u_quantile_hi is None else self.u_quantile_hi.tolist(),
        }
        return json.dumps(data, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "VolumeProfile":
        data = json.loads(text)
        opt = lambda k: None if data.get(k) is None else np.asarray(data[k], dtype=float)
        return cls(
            grid=np.asarray(data["grid"], dtype=float),
            u_mean=np.asarray(data["u_mean"], dtype=float),
            u_std=np.asarray(data["u_std"], dtype=float),
            u_quantile_lo=opt("u_quantile_lo"),
            u_quantile_hi=opt("u_quantile_hi"),
            q=data.get("q"),
        )


def normalize_curve(u_raw: Sequence[float]) -> np.ndarray:
    """Rescale a raw cumulative volume curve so it runs from 0 to 1 on the window."""
    u_raw = np.asarray(u_raw, dtype=float)
    if u_raw.ndim != 1 or len(u_raw) < 2:
        raise ValueError("need at least two samples")
    if np.any(np.diff(u_raw) < 0):
        raise ValueError("raw volume curve must be non-decreasing")
    span = u_raw[-1] - u_raw[0]
    if not span > 0:
        raise ValueError("raw volume curve is flat over the window")
    out = (u_raw - u_raw[0]) / span
    out[-1] = 1.0
    return out


def build_profile(history, grid: Optional[Sequence[float]] = None,
                  q: Optional[float] = 0.1) -> VolumeProfile:
    """Estimate a volume profile from an ensemble of normalized daily curves.

    Args:
        history: array-like of shape ``(H, M)``, one normalized curve per day.
        grid: the common time grid; defaults to ``M`` points over one session.
        q: lower tail level for the empirical quantile curves. Quantiles are
            only estimated for ``H >= 20``.

    Returns:
        VolumeProfile with sample mean, sample standard deviation (divisor
        ``H - 1``) and optional quantile curves.
    """
    h = np.asarray(history, dtype=float)
    if h.ndim != 2 or h.shape[0] < 2:
        raise ValueError("need an ensemble of at least two curves")
    if grid is None:
        grid = np.linspace(0.0, SESSION_SECONDS, h.shape[1])
    grid = np.asarray(grid, dtype=float)
    if len(grid) != h.shape[1]:
        raise ValueError("grid length does not match curve length")
    if (np.any(np.abs(h[:, 0]) > 1e-9) or np.any(np.abs(h[:, -1] - 1) > 1e-9)
            or np.any(np.diff(h, axis=1) < -_TOL)):
        raise ValueError("history curves must be normalized to run from 0 to 1")

    mean = h.mean(axis=0)
    std = h.std(axis=0, ddof=1)
    mean[0], mean[-1] = 0.0, 1.0
    std[0], std[-1] = 0.0, 0.0
    lo = hi = None
    if q is not None and h.shape[0] >= MIN_QUANTILE_DAYS:
        lo = np.minimum(np.quantile(h, q, axis=0), mean)
        hi = np.maximum(np.quantile(h, 1 - q, axis=0), mean)
        lo[0], hi[0], lo[-1], hi[-1] = 0.0, 0.0, 1.0, 1.0
    else:
        q = None
    return VolumeProfile(grid, mean, std, lo, hi, q)


def restrict_curves(history, grid: Sequence[float], t0: float, t1: float,
                    n_points: int = DEFAULT_BINS + 1):
    """Resample daily curves onto ``[t0, t1]`` and renormalize each one.

    Returns ``(new_grid, curves)``. Useful when the order window is shorter
    than the session the history was recorded over.
    """
    h = np.asarray(history, dtype=float)
    grid = np.asarray(grid, dtype=float)
    new_grid = np.linspace(t0, t1, n_points)
    curves = np.vstack([normalize_curve(np.interp(new_grid, grid, row)) for row in h])
    return new_grid, curves


def vwap_bands_at(profile: VolumeProfile, cfg: VwapConfig, x0: float, t: float,
                  offset: float = 0.0) -> BandSet:
    """Bands at time ``t`` for an order of ``x0`` shares.

    ``offset`` shifts all three trajectories up (dark block executions)
    before clamping at ``x0``.
    """
    i, w = profile._locate(t)
    m = profile._m
    x_tgt = (m[i] + w * (m[i + 1] - m[i])) * x0
    if cfg.mode is BandMode.QUANTILE and profile.has_quantiles:
        lo, hi = profile._lo, profile._hi
        x_min = (lo[i] + w * (lo[i + 1] - lo[i])) * x0
        x_max = (hi[i] + w * (hi[i + 1] - hi[i])) * x0
    else:
        if cfg.mode is BandMode.QUANTILE:
            # quantile curves missing: fall back to normal-theory bands
            eta = _normal_quantile(1 - cfg.q)
        else:
            eta = cfg.eta
        s = profile._s
        half = eta * (s[i] + w * (s[i + 1] - s[i])) * x0
        x_min = x_tgt - half
        x_max = x_tgt + half
    if offset:
        # clamp the unshifted bands first so the shift acts on valid trajectories
        x_min, x_max = max(x_min, 0.0), min(x_max, x0)
        x_min, x_tgt, x_max = x_min + offset, x_tgt + offset, x_max + offset
    return BandSet.clamped(t, x_min, x_tgt, x_max, x0)


def vwap_band_table(profile: VolumeProfile, cfg: VwapConfig, x0: float, times):
    """Unshifted bands at many times at once: ``(x_min, x_tgt, x_max)`` arrays.

    Uses the same interpolation and clamping arithmetic as
    :func:`vwap_bands_at`, element by element, so the values are identical.
    """
    t = np.asarray(times, dtype=float)
    g = profile.grid
    if t.size and (t.min() < g[0] - _TOL or t.max() > g[-1] + _TOL):
        raise BandError(f"times outside profile window [{g[0]}, {g[-1]}]")
    i = np.clip(np.searchsorted(g, t, side="right") - 1, 0, len(g) - 2)
    w = np.clip((t - g[i]) / (g[i + 1] - g[i]), 0.0, 1.0)

    def interp(arr):
        return arr[i] + w * (arr[i + 1] - arr[i])

    x_tgt = interp(profile.u_mean) * x0
    if cfg.mode is BandMode.QUANTILE and profile.has_quantiles:
        x_min = interp(profile.u_quantile_lo) * x0
        x_max = interp(profile.u_quantile_hi) * x0
    else:
        eta = _normal_quantile(1 - cfg.q) if cfg.mode is BandMode.QUANTILE else cfg.eta
        half = eta * interp(profile.u_std) * x0
        x_min, x_max = x_tgt - half, x_tgt + half
    lo = np.clip(x_min, 0.0, x0)
    hi = np.where(x_max < lo, lo, np.minimum(x_max, x0))
    tgt = np.where(x_tgt < lo, lo, np.minimum(x_tgt, hi))
    return lo, tgt, hi


def _normal_quantile(p: float) -> float:
    from statistics import NormalDist
    return NormalDist().inv_cdf(p)


def check_quantile_mode(profile: VolumeProfile, cfg: VwapConfig) -> VwapConfig:
    """Warn and switch to symmetric bands if the profile has no quantile curves."""
    if cfg.mode is BandMode.QUANTILE and not profile.has_quantiles:
        eta = _normal_quantile(1 - cfg.q)
        log.warning("profile has no quantile curves (need >= %d days); "
                    "using symmetric bands with eta=%.4f", MIN_QUANTILE_DAYS, eta)
        return VwapConfig(eta=eta, q=cfg.q, mode=BandMode.SYMMETRIC, strict=cfg.strict)
    return cfg


def read_history_csv(path) -> np.ndarray:
    """Load daily curves: one row per day, a date column followed by fractions.

    A header row is optional and skipped when its second field is not numeric.
    """
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec:
                continue
            try:
                vals = [float(v) for v in rec[1:]]
            except ValueError:
                if rows:
                    raise
                continue
            rows.append(normalize_curve(vals))
    if not rows:
        raise ValueError(f"{path}: no curves found")
    return np.vstack(rows)


def write_history_csv(path, curves, dates: Optional[Sequence[str]] = None) -> None:
    curves = np.asarray(curves, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date"] + [f"u{j}" for j in range(curves.shape[1])])
        for k, row in enumerate(curves):
            d = dates[k] if dates is not None else f"day{k:04d}"
            w.writerow([d] + [repr(float(v)) for v in row])


def load_profile(path) -> VolumeProfile:
    return VolumeProfile.from_json(Path(path).read_text())


def save_profile(path, profile: VolumeProfile) -> None:
    Path(path).write_text(profile.to_json())


def clock_to_volume_time(profile: VolumeProfile, t: float, t_start: float) -> float:
    """Expected fraction of the day's volume traded between ``t_start`` and ``t``."""
    if t <= t_start:
        return 0.0
    return max(0.0, profile.mean_at(min(t, profile.t1)) - profile.mean_at(t_start))


def u_shape_weights(n: int, depth: float = 0.6) -> np.ndarray:
    """Relative per-interval volume intensity with a U shape, summing to 1.

    ``depth`` is how far the midday trough sits below the open/close level.
    """
    x = (np.arange(n) + 0.5) / n
    w = 1.0 - depth + depth * (2 * x - 1) ** 2
    # steeper pickup at the close
    w = w + 0.5 * depth * np.exp(-(1 - x) * 12)
    return w / w.sum()


__all__ = [
    "BandMode", "VwapConfig", "VolumeProfile", "normalize_curve", "build_profile",
    "restrict_curves", "vwap_bands_at", "vwap_band_table", "check_quantile_mode", "read_history_csv",
    "write_history_csv", "load_profile", "save_profile", "clock_to_volume_time",
    "u_shape_weights", "MIN_QUANTILE_DAYS", "DEFAULT_BINS", "SESSION_SECONDS",
]
