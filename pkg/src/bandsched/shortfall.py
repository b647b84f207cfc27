"""Mean-variance implementation-shortfall scheduling with power-law trajectories.

Time here is volume time: ``T = 1`` is one full day of expected volume. The
residual position follows ``Y(t) = X0 * (1 - t/T) ** nu``. Expected impact
uses an instantaneous power-law impact ``J(rate) = I0 * sigma_D * P0 *
(rate / V_D) ** beta`` with either an instantaneous (delta) decay kernel or
a power-law kernel ``g0 / |t - s| ** gamma``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

from .core import BandSet

NU_MAX = 10.0
NU_TOL = 1e-4

_INV_PHI = (math.sqrt(5) - 1) / 2
_INV_PHI2 = (3 - math.sqrt(5)) / 2


@dataclass(frozen=True)
class ImpactParams:
    i0: float
    beta: float
    sigma_d: float
    p0: float
    v_d: float
    g0: float = 1.0
    gamma: float = 0.5

    def __post_init__(self):
        for name in ("i0", "beta", "sigma_d", "p0", "v_d", "g0", "gamma"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.beta > 1:
            raise ValueError(f"beta must be <= 1, got {self.beta}")
        if self.gamma >= 1:
            raise ValueError(f"gamma must be < 1, got {self.gamma}")


@dataclass(frozen=True)
class RiskParams:
    aversion: float
    rho: float

    @classmethod
    def from_aversion(cls, aversion: float, params: ImpactParams, x0: float) -> "RiskParams":
        if not aversion > 0:
            raise ValueError(f"risk aversion must be positive, got {aversion}")
        return cls(aversion, params.sigma_d * x0 * params.p0 / aversion)


@dataclass(frozen=True)
class PowerLawSchedule:
    x0: float
    t_dur: float
    nu: float = 1.0

    def __post_init__(self):
        if not self.t_dur > 0:
            raise ValueError(f"duration must be positive, got {self.t_dur}")
        if self.nu < 1:
            raise ValueError(f"shape must be >= 1, got {self.nu}")


@dataclass(frozen=True)
class VolumeDistribution:
    """Lognormal daily volume: ``log V_D ~ N(mu_z, sigma_z**2)``."""

    mu_z: float
    sigma_z: float

    def __post_init__(self):
        if not self.sigma_z > 0:
            raise ValueError(f"sigma_z must be positive, got {self.sigma_z}")


@dataclass(frozen=True)
class IsBandDurations:
    t_min: float
    t_tgt: float
    t_max: float
    nu: float = 1.0
    eta: float = 1.0

    def __post_init__(self):
        if not (0 < self.t_min <= self.t_tgt <= self.t_max):
            raise ValueError(
                f"need 0 < t_min <= t_tgt <= t_max, got {self.t_min}, {self.t_tgt}, {self.t_max}")


@dataclass(frozen=True)
class ShapeResult:
    nu: float
    cost: float
    at_boundary: bool


def residual(sched: PowerLawSchedule, t: float) -> float:
    if t < 0:
        raise ValueError("t must be >= 0")
    if t >= sched.t_dur:
        return 0.0
    return sched.x0 * (1.0 - t / sched.t_dur) ** sched.nu


def executed(sched: PowerLawSchedule, t: float) -> float:
    return sched.x0 - residual(sched, t)


def shape_factor(nu: float, beta: float) -> float:
    """Impact of a power-law schedule relative to the linear one."""
    den = 1.0 + (nu - 1.0) * (beta + 1.0)
    if not den > 0:
        raise ValueError(f"shape {nu} is outside the integrable range for beta={beta}")
    return nu ** (beta + 1.0) / den


def impact_cost(T: float, nu: float, p: ImpactParams, x0: float) -> float:
    """Expected impact cost (currency) under the instantaneous decay kernel."""
    if not T > 0:
        raise ValueError(f"duration must be positive, got {T}")
    return (shape_factor(nu, p.beta) * p.i0 * p.sigma_d * x0 * p.p0
            * (x0 / (T * p.v_d)) ** p.beta)


def timing_risk_sq(T: float, nu: float, p: ImpactParams, x0: float) -> float:
    if not T > 0:
        raise ValueError(f"duration must be positive, got {T}")
    if nu < 0:
        raise ValueError("shape must be >= 0")
    return (p.sigma_d * x0 * p.p0) ** 2 * T / (2.0 * nu + 1.0)


def total_cost(T: float, nu: float, p: ImpactParams, r: RiskParams, x0: float) -> float:
    return impact_cost(T, nu, p, x0) + timing_risk_sq(T, nu, p, x0) / (2.0 * r.rho)


def optimal_duration(p: ImpactParams, aversion: float, x0: float) -> float:
    """Cost-minimizing volume duration for the linear (``nu = 1``) schedule."""
    b = p.beta
    return (6.0 * b * p.i0 / aversion) ** (1.0 / (b + 1.0)) * (x0 / p.v_d) ** (b / (b + 1.0))


def optimal_participation(p: ImpactParams, aversion: float, x0: float) -> float:
    b = p.beta
    return (aversion / (6.0 * b * p.i0)) ** (1.0 / (b + 1.0)) * (x0 / p.v_d) ** (1.0 / (b + 1.0))


def optimal_shortfall(p: ImpactParams, aversion: float, x0: float, nu: float = 1.0) -> float:
    """Expected impact cost of the schedule run over the optimal duration."""
    b = p.beta
    k = b / (b + 1.0)
    return ((aversion / (6.0 * p.i0 * b)) ** k * shape_factor(nu, b)
            * p.i0 * p.sigma_d * p.p0 * x0 * (x0 / p.v_d) ** k)


def golden_section(f: Callable[[float], float], a: float, b: float,
                   tol: float = NU_TOL) -> Tuple[float, float]:
    """Minimize a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``.

    The bracket is shrunk until it is narrower than ``tol``; the better of
    the two interior probes and the endpoints is returned so that minima at
    the edge of the interval are reported at the edge.
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    c, d = a + _INV_PHI2 * h, a + _INV_PHI * h
    fc, fd = f(c), f(d)
    while h > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            h = _INV_PHI * h
            c = a + _INV_PHI2 * h
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            h = _INV_PHI * h
            d = a + _INV_PHI * h
            fd = f(d)
    x, fx = (c, fc) if fc < fd else (d, fd)
    for edge in (a, b):
        fe = f(edge)
        if fe < fx:
            x, fx = edge, fe
    return x, fx


def optimal_shape(T: float, p: ImpactParams, r: RiskParams, x0: float,
                  nu_max: float = NU_MAX, tol: float = NU_TOL) -> ShapeResult:
    if not T > 0:
        raise ValueError(f"duration must be positive, got {T}")
    nu, cost = golden_section(lambda v: total_cost(T, v, p, r, x0), 1.0, nu_max, tol)
    return ShapeResult(nu=nu, cost=cost, at_boundary=nu >= nu_max - tol)


def gamma_fn(x: float) -> float:
    # CPython's math.gamma is a Lanczos approximation accurate to a few ulps
    return math.gamma(x)


def powerlaw_kernel_cost(T: float, nu: float, p: ImpactParams, x0: float) -> float:
    """Expected impact cost (currency) with the power-law decay kernel."""
    g, b = p.gamma, p.beta
    if g >= 1:
        raise ValueError("decay exponent must be < 1 for the kernel to be integrable")
    if not T > 0:
        raise ValueError(f"duration must be positive, got {T}")
    den = 2.0 - g + (b + 1.0) * (nu - 1.0)
    if not den > 0:
        raise ValueError("shape outside the integrable range")
    return (T ** (1.0 - g - b) * p.i0 * p.sigma_d * p.g0 * x0 * p.p0 * (x0 / p.v_d) ** b
            * nu ** (b + 1.0) * gamma_fn(1.0 - g) * gamma_fn(nu)
            / (den * gamma_fn(1.0 - g + nu)))


def lognormal_moments(dist: VolumeDistribution, omega: float) -> Tuple[float, float]:
    """Mean and standard deviation of ``V_D ** -omega`` for lognormal ``V_D``."""
    if not omega > 0:
        raise ValueError("omega must be positive")
    s2 = (omega * dist.sigma_z) ** 2
    mean = math.exp(-omega * dist.mu_z + s2 / 2.0)
    std = math.sqrt(math.expm1(s2)) * mean
    return mean, std


def duration_exponent(beta: float) -> float:
    return beta / (beta + 1.0)


def duration_scale(p: ImpactParams, aversion: float, x0: float) -> float:
    """Constant ``c`` with ``T_opt = c * V_D ** -omega``."""
    b = p.beta
    return x0 ** duration_exponent(b) * (6.0 * b * p.i0 / aversion) ** (1.0 / (b + 1.0))


def band_durations(p: ImpactParams, aversion: float, x0: float, dist: VolumeDistribution,
                   eta: float, nu: float = 1.0,
                   moments: Optional[Tuple[float, float]] = None) -> IsBandDurations:
    """Minimum, target and maximum durations from volume uncertainty.

    By default the moments of ``V_D ** -omega`` come from ``dist`` with
    ``omega = beta / (beta + 1)``. Passing ``moments=(mean, std)`` uses
    externally supplied values instead.
    """
    if eta < 0:
        raise ValueError("eta must be >= 0")
    mean, std = moments if moments is not None else lognormal_moments(
        dist, duration_exponent(p.beta))
    c = duration_scale(p, aversion, x0)
    lo = mean - eta * std
    if not lo > 0:
        raise ValueError(f"discretion eta={eta} collapses the minimum duration")
    return IsBandDurations(c * lo, c * mean, c * (mean + eta * std), nu=nu, eta=eta)


def anchored_band_durations(t_tgt: float, mean: float, std: float, eta: float,
                            nu: float = 1.0) -> IsBandDurations:
    """Durations spread around a given target by the relative volume dispersion.

    Equivalent to :func:`band_durations` with ``c = t_tgt / mean``; used when
    the target duration is pinned to the optimal duration and only the ratio
    ``std / mean`` is taken from the volume distribution.
    """
    if eta < 0:
        raise ValueError("eta must be >= 0")
    rel = std / mean
    if not 1 - eta * rel > 0:
        raise ValueError(f"discretion eta={eta} collapses the minimum duration")
    return IsBandDurations(t_tgt * (1 - eta * rel), t_tgt, t_tgt * (1 + eta * rel), nu=nu, eta=eta)


def is_bands_at(dur: IsBandDurations, x0: float, t: float) -> BandSet:
    """Bands in volume time; the fastest schedule bounds fills from above."""
    if t < 0:
        raise ValueError("t must be >= 0")

    def done(T):
        return x0 if t >= T else x0 - x0 * (1.0 - t / T) ** dur.nu

    return BandSet.clamped(t, done(dur.t_max), done(dur.t_tgt), done(dur.t_min), x0)


def optimize(p: ImpactParams, aversion: float, x0: float, dist: VolumeDistribution,
             eta: float = 1.0, moments: Optional[Tuple[float, float]] = None,
             anchor: bool = False) -> dict:
    """Run the whole optimizer and return a flat, JSON-ready dict."""
    r = RiskParams.from_aversion(aversion, p, x0)
    t_opt = optimal_duration(p, aversion, x0)
    shape = optimal_shape(t_opt, p, r, x0)
    if anchor:
        if moments is None:
            moments = lognormal_moments(dist, duration_exponent(p.beta))
        dur = anchored_band_durations(t_opt, moments[0], moments[1], eta, nu=shape.nu)
    else:
        dur = band_durations(p, aversion, x0, dist, eta, nu=shape.nu, moments=moments)
    notional = x0 * p.p0
    imp1 = impact_cost(t_opt, 1.0, p, x0)
    imp = impact_cost(t_opt, shape.nu, p, x0)
    risk2 = timing_risk_sq(t_opt, shape.nu, p, x0)
    pl = powerlaw_kernel_cost(t_opt, shape.nu, p, x0)
    out = {
        "t_opt": t_opt,
        "p_opt": optimal_participation(p, aversion, x0),
        "nu_opt": shape.nu,
        "nu_at_boundary": shape.at_boundary,
        "t_min": dur.t_min,
        "t_tgt": dur.t_tgt,
        "t_max": dur.t_max,
        "rho": r.rho,
        "impact_cost_linear": imp1,
        "impact_cost": imp,
        "timing_risk": math.sqrt(risk2),
        "total_cost": shape.cost,
        "powerlaw_kernel_cost": pl,
    }
    for k in ("impact_cost_linear", "impact_cost", "timing_risk", "total_cost",
              "powerlaw_kernel_cost"):
        out[k + "_bps"] = out[k] / notional * 1e4
    out["impact_cost_per_share"] = imp / x0
    return out

