"""Assemble strategies, market and driver from a :class:`RunConfig`.

These are the building blocks behind the command line; they are also what
the acceptance tests call, so a CLI run and a test run with the same config
go through identical code.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import OptimizeIsConfig, RunConfig
from .core import Order, Side
from .discrete import (
    BinGrid, BinWindow, Coordinate, ScheduleRun, TacticOrder, clock_grid, linear_vwap_bands,
    realize_bins, run_schedule, volume_grid, write_ledger_csv,
)
from .driver import IsStrategy, OrderRun, PovStrategy, Strategy, VwapStrategy, run_order
from .pov import PovRates
from .report import (
    SCHEMA_VERSION, ensure_dir, fill_metrics, run_metrics, schedule_trajectory_rows,
    write_fills_csv, write_json, write_run, write_trajectory_csv,
)
from .shortfall import (
    ImpactParams, IsBandDurations, RiskParams, VolumeDistribution, anchored_band_durations,
    band_durations, duration_exponent, lognormal_moments, optimal_duration, optimal_shape,
    optimize,
)
from .sim import MarketTape, SimConfig, generate_market, simulate_history, simulate_tactic
from .vwap import (
    BandMode, VolumeProfile, VwapConfig, build_profile, check_quantile_mode, vwap_bands_at,
    write_history_csv,
)


def make_order(cfg: RunConfig) -> Order:
    o = cfg.order
    end = o.end_time if o.end_time is not None else cfg.sim.session_length
    return Order(Side(o.side), o.total_shares, o.start_time, end, o.limit_price)


def history_profile(sim: SimConfig, n_days: int) -> VolumeProfile:
    """Volume profile from ``n_days`` of simulated history for this seed."""
    h = simulate_history(sim, n_days)
    return build_profile(h, np.linspace(0.0, sim.session_length, h.shape[1]))


def optimizer_inputs(c: OptimizeIsConfig):
    p = ImpactParams(i0=c.i0, beta=c.beta, sigma_d=c.sigma_d, p0=c.p0, v_d=c.v_d,
                     g0=c.g0, gamma=c.gamma)
    return p, VolumeDistribution(c.mu_z, c.sigma_z)


def cmd_optimize_is(c: OptimizeIsConfig) -> dict:
    """Optimizer report for one parameter set, JSON-ready."""
    p, dist = optimizer_inputs(c)
    out = optimize(p, c.aversion, c.x0, dist, eta=c.eta,
                   moments=tuple(c.moments) if c.moments is not None else None,
                   anchor=c.anchor)
    out["schema_version"] = SCHEMA_VERSION
    return out


def is_durations(cfg: RunConfig) -> IsBandDurations:
    s, isc, x0 = cfg.sim, cfg.is_, cfg.order.total_shares
    p = ImpactParams(i0=isc.i0, beta=isc.beta, sigma_d=s.daily_vol, p0=s.price0,
                     v_d=s.daily_volume)
    dist = VolumeDistribution(
        isc.mu_z if isc.mu_z is not None else math.log(s.daily_volume),
        isc.sigma_z if isc.sigma_z is not None else s.volume_dispersion)
    t_opt = optimal_duration(p, isc.aversion, x0)
    nu = optimal_shape(t_opt, p, RiskParams.from_aversion(isc.aversion, p, x0), x0).nu
    if isc.anchor:
        mean, std = lognormal_moments(dist, duration_exponent(p.beta))
        return anchored_band_durations(t_opt, mean, std, isc.eta, nu=nu)
    return band_durations(p, isc.aversion, x0, dist, isc.eta, nu=nu)


def make_strategy(cfg: RunConfig, order: Order) -> Strategy:
    x0 = order.total_shares
    if cfg.strategy == "vwap":
        v = cfg.vwap
        vc = VwapConfig(eta=v.eta, q=v.q, mode=BandMode(v.mode), strict=v.strict)
        prof = history_profile(cfg.sim, v.history_days)
        return VwapStrategy(prof, check_quantile_mode(prof, vc), x0)
    if cfg.strategy == "pov":
        r = cfg.pov
        return PovStrategy(PovRates.constant(r.p_min, r.p_tgt, r.p_max), x0, strict=r.strict)
    if cfg.strategy == "is":
        prof = history_profile(cfg.sim, cfg.is_.history_days)
        return IsStrategy(is_durations(cfg), x0, prof, order.start_time)
    raise ValueError(f"no continuous strategy named {cfg.strategy!r}")


@dataclass
class ContinuousResult:
    run: OrderRun
    tape: MarketTape
    order: Order
    strategy: Strategy
    metrics: dict


def run_continuous(cfg: RunConfig, out_dir: Optional[str] = None,
                   tape: Optional[MarketTape] = None) -> ContinuousResult:
    """Run a continuous-driver strategy; writes outputs when ``out_dir`` is set."""
    order = make_order(cfg)
    strategy = make_strategy(cfg, order)
    tape = generate_market(cfg.sim) if tape is None else tape
    run = run_order(strategy, order, tape, cfg.sim, cfg.driver)
    extra = {"strategy": cfg.strategy, "seed": cfg.sim.seed}
    if out_dir is not None:
        metrics = write_run(out_dir, run, tape, order.side, cfg.formats, **extra)
    else:
        metrics = run_metrics(run, tape, order.side, **extra)
    return ContinuousResult(run, tape, order, strategy, metrics)


@dataclass
class DiscreteResult:
    run: ScheduleRun
    tape: MarketTape
    order: Order
    bins: list
    metrics: dict


def _grid(cfg: RunConfig, order: Order, prof: Optional[VolumeProfile]) -> BinGrid:
    d = cfg.discrete
    t0, t1 = order.start_time, order.end_time
    if d.coordinate == "clock":
        return clock_grid(t0, t1, d.n_bins)
    if d.coordinate == "volume" and prof is not None:
        return volume_grid(prof, t0, t1, d.n_bins)
    return BinGrid(Coordinate(d.coordinate), d.n_bins, 0.0, 1.0)


def run_discrete(cfg: RunConfig, out_dir: Optional[str] = None,
                 tape: Optional[MarketTape] = None) -> DiscreteResult:
    """Bin-by-bin schedule with a single passive tactic and aggressive clean-up."""
    d, sim = cfg.discrete, cfg.sim
    order = make_order(cfg)
    x0 = order.total_shares
    tape = generate_market(sim) if tape is None else tape
    prof = history_profile(sim, d.history_days) if d.bands == "vwap" else None
    bins = realize_bins(_grid(cfg, order, prof), tape, order.start_time, order.end_time)
    if d.bands == "linear":
        source = linear_vwap_bands(x0, d.n_bins)
    else:
        vc = VwapConfig(eta=d.eta)

        def source(k, t_end):
            if k >= d.n_bins:
                return vwap_bands_at(prof, vc, x0, prof.t1)
            return vwap_bands_at(prof, vc, x0, min(t_end, prof.t1))

    def tactic(to: TacticOrder, win: BinWindow):
        return simulate_tactic(to, tape, win.start, win.stop, sim, order.side)

    def cover(shares: int, win: BinWindow):
        # an empty bin still has a last tick to trade on: the one before it
        i = max(win.stop, win.start + 1, 1) - 1
        return simulate_tactic(TacticOrder(shares, 0.0, shares), tape, i, i + 1, sim, order.side)

    srun = run_schedule(order, bins, source, tactic, cover)
    i0, i1 = bins[0].start, bins[-1].stop
    arrival = float(tape.mid[i0 - 1]) if i0 > 0 else sim.price0
    metrics = fill_metrics(srun.state.fills, order.side, x0, tape.vwap(i0, i1), arrival)
    metrics.update({
        "schema_version": SCHEMA_VERSION, "strategy": "discrete", "seed": sim.seed,
        "n_bins": d.n_bins, "coordinate": d.coordinate,
        "band_violations": boundary_violations(srun),
        "cleanup_shares": sum(r.cleanup for r in srun.ledger),
    })
    if out_dir is not None:
        ensure_dir(out_dir)
        if "trajectory" in cfg.formats:
            write_trajectory_csv(os.path.join(out_dir, "trajectory.csv"),
                                 schedule_trajectory_rows(srun, order.start_time))
        if "fills" in cfg.formats:
            write_fills_csv(os.path.join(out_dir, "fills.csv"), srun.state.fills)
        if "ticks" in cfg.formats:
            write_ledger_csv(os.path.join(out_dir, "bins.csv"), srun.ledger)
        if "metrics" in cfg.formats:
            write_json(os.path.join(out_dir, "metrics.json"), metrics)
    return DiscreteResult(srun, tape, order, bins, metrics)


def boundary_violations(srun: ScheduleRun, tol: float = 1e-9) -> int:
    """Bin boundaries where the filled position ended outside the bands."""
    return sum(1 for row in srun.ledger
               if not row.x_min - tol <= row.filled <= row.x_max + tol)


def cmd_gen_market(sim: SimConfig, out_dir: str, history_days: int = 0) -> dict:
    """Write the seeded tape (and optionally a volume history) to ``out_dir``."""
    ensure_dir(out_dir)
    tape = generate_market(sim)
    tape.to_csv(os.path.join(out_dir, "market.csv"))
    summary = {
        "schema_version": SCHEMA_VERSION, "seed": sim.seed, "n_ticks": len(tape),
        "volume": float(np.sum(tape.trade_qty)), "dark_events": int(np.sum(tape.dark_qty > 0)),
        "open_mid": float(tape.mid[0]), "close_mid": float(tape.mid[-1]),
    }
    if history_days:
        write_history_csv(os.path.join(out_dir, "history.csv"),
                          simulate_history(sim, history_days))
        summary["history_days"] = history_days
    write_json(os.path.join(out_dir, "market_summary.json"), summary)
    return summary


__all__ = [
    "make_order", "history_profile", "cmd_optimize_is", "is_durations", "make_strategy",
    "ContinuousResult", "run_continuous", "DiscreteResult", "run_discrete",
    "boundary_violations", "cmd_gen_market",
]
