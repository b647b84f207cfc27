"""The tactical driver shared by every schedule-based strategy.

A strategy is only a band source: it reports its bands at time ``t`` and
absorbs dark block executions. Each tick the driver compares the filled
position with the bands, partitions the residual, applies the alpha overlay
and turns the result into whole-share child orders.
"""
from __future__ import annotations

import gc
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .core import (
    BandSet, Compliance, ExecutionState, Order, SharePartition, Venue, band_compliance,
    ceil_shares, compute_partition, floor_shares,
)
from .pov import EligibleVolumeAccumulator, PovRates, pov_bands_at
from .shortfall import IsBandDurations, is_bands_at
from .sim import (
    ChildOrder, MarketTape, SimConfig, _signal_from_return,
    execute_children,
)
from .vwap import (
    VolumeProfile, VwapConfig, clock_to_volume_time, vwap_band_table, vwap_bands_at,
)


class StrategyError(RuntimeError):
    pass


class Strategy:
    """Base band source. Subclasses implement :meth:`base_bands`."""

    kind = "base"

    def __init__(self, x0: float, dark_allowed: bool = True):
        self.x0 = x0
        self.dark_allowed = dark_allowed
        self.offset = 0.0

    def base_bands(self, t: float) -> BandSet:
        raise NotImplementedError

    def bands(self, t: float) -> BandSet:
        b = self.base_bands(t)
        if self.offset:
            x0 = self.x0
            off = self.offset
            return BandSet.clamped(t, b.x_min + off, b.x_tgt + off, b.x_max + off, x0)
        return b

    def band_table(self, times: np.ndarray) -> Optional[Tuple[list, list, list]]:
        """Unshifted, clamped bands at many times at once, or None.

        Strategies whose bands depend on time alone can return
        ``(x_min, x_tgt, x_max)`` lists here; the driver then adds the
        block offset per tick instead of calling :meth:`bands`.
        """
        return None

    def observe(self, tape: MarketTape, i: int, order: Order) -> None:
        """Hook for strategies that consume market prints."""

    def on_block(self, qty: float) -> None:
        if not qty > 0:
            raise StrategyError(f"block must be positive, got {qty}")
        self.offset += qty


class VwapStrategy(Strategy):
    kind = "alpha_vwap"

    def __init__(self, profile: VolumeProfile, cfg: VwapConfig, x0: float):
        super().__init__(x0, dark_allowed=not cfg.strict)
        self.profile = profile
        self.cfg = cfg

    def base_bands(self, t: float) -> BandSet:
        return vwap_bands_at(self.profile, self.cfg, self.x0, t)

    def bands(self, t: float) -> BandSet:
        return vwap_bands_at(self.profile, self.cfg, self.x0, t, self.offset)

    def band_table(self, times: np.ndarray) -> Tuple[list, list, list]:
        lo, tgt, hi = vwap_band_table(self.profile, self.cfg, self.x0, times)
        return lo.tolist(), tgt.tolist(), hi.tolist()


class PovStrategy(Strategy):
    kind = "alpha_pov"

    def __init__(self, rates: PovRates, x0: float, strict: bool = False):
        super().__init__(x0, dark_allowed=not strict)
        self.rates = rates
        self.acc = EligibleVolumeAccumulator()

    def observe(self, tape: MarketTape, i: int, order: Order) -> None:
        L = tape.lists()
        q = L["trade_qty"][i]
        if q > 0:
            self.acc.on_market_trade(q, L["trade_price"][i], order, self.rates, L["time"][i])

    def on_block(self, qty: float) -> None:
        self.acc.apply_block(qty)

    def base_bands(self, t: float) -> BandSet:
        return pov_bands_at(self.acc, self.x0, t)

    def bands(self, t: float) -> BandSet:
        # the accumulator already carries the block offset
        return self.base_bands(t)


class IsStrategy(Strategy):
    """Power-law schedules in volume time, mapped to clock time by a volume profile."""

    kind = "alpha_is"

    def __init__(self, durations: IsBandDurations, x0: float, profile: VolumeProfile,
                 t_start: float, dark_allowed: bool = True):
        super().__init__(x0, dark_allowed)
        self.durations = durations
        self.profile = profile
        self.t_start = t_start

    def base_bands(self, t: float) -> BandSet:
        tau = clock_to_volume_time(self.profile, t, self.t_start)
        b = is_bands_at(self.durations, self.x0, tau)
        return BandSet(t, b.x_min, b.x_tgt, b.x_max, b.x0)


@dataclass(frozen=True)
class DriverConfig:
    overlay_fraction: float = 0.25
    signal_horizon: float = 300.0
    signal_threshold: float = 0.5
    # return that saturates the signal; None means two horizon standard deviations
    signal_scale: Optional[float] = None
    alpha: bool = True
    pause_all_venues: bool = False

    def __post_init__(self):
        if not 0 <= self.overlay_fraction <= 1:
            raise ValueError("overlay_fraction must lie in [0, 1]")
        if self.signal_horizon <= 0:
            raise ValueError("signal_horizon must be positive")
        if not 0 <= self.signal_threshold <= 1:
            raise ValueError("signal_threshold must lie in [0, 1]")


@dataclass(slots=True)
class DriverTickReport:
    time: float
    bands: BandSet
    filled: float
    partition: SharePartition
    compliance: Compliance
    signal: float
    actions: Tuple[ChildOrder, ...]
    filled_after: float = 0.0
    bands_after: Optional[BandSet] = None
    dark_shift: float = 0.0

    @property
    def compliance_after(self) -> Compliance:
        return band_compliance(self.bands_after or self.bands, self.filled_after)


@dataclass
class OrderRun:
    state: ExecutionState
    reports: List[DriverTickReport] = field(default_factory=list)
    arrival_mid: float = float("nan")
    start_index: int = 0
    stop_index: int = 0


def _signal_scale(sim: SimConfig, dcfg: DriverConfig) -> float:
    if dcfg.signal_scale is not None:
        return dcfg.signal_scale
    return 2.0 * max(sim.daily_vol, 1e-12) * math.sqrt(dcfg.signal_horizon / sim.session_length)


def signal_at(tape: MarketTape, i: int, order: Order, sim: SimConfig,
              dcfg: DriverConfig) -> float:
    if not dcfg.alpha or sim.mean_reversion == 0:
        return 0.0
    L = tape.lists()
    h = max(1, int(round(dcfg.signal_horizon / tape.tick_interval)))
    r = L["logmid"][i] - L["logmid"][max(0, i - h)]
    return _signal_from_return(r, order.side, sim.mean_reversion, _signal_scale(sim, dcfg))


def signal_series(tape: MarketTape, order: Order, sim: SimConfig,
                  dcfg: DriverConfig) -> List[float]:
    """:func:`signal_at` for every tick at once."""
    n = len(tape)
    if not dcfg.alpha or sim.mean_reversion == 0:
        return [0.0] * n
    h = max(1, int(round(dcfg.signal_horizon / tape.tick_interval)))
    lm = np.log(tape.mid)
    r = lm - lm[np.maximum(np.arange(n) - h, 0)]
    s = -order.side.sign * sim.mean_reversion * r / _signal_scale(sim, dcfg)
    return np.clip(s, -1.0, 1.0).tolist()


def drive_tick(strategy: Strategy, state: ExecutionState, t: float, signal: float,
               dcfg: DriverConfig, bands: Optional[BandSet] = None,
               ) -> Tuple[List[ChildOrder], DriverTickReport]:
    """Decide this tick's child orders from the bands and the filled position.

    ``bands`` may be passed in when the caller has already evaluated them.
    """
    if bands is None:
        try:
            bands = strategy.bands(t)
        except Exception as exc:
            raise StrategyError(
                f"{strategy.kind}: band evaluation failed at t={t}: {exc}") from exc
    filled = state.filled
    part = compute_partition(bands, filled)
    comp = band_compliance(bands, filled)
    children: List[ChildOrder] = []
    if comp is not Compliance.ABOVE_MAX:
        x_a, x_p1, x_p2, _ = part
        cover = ceil_shares(x_a)
        room = floor_shares(bands.x_max - filled) - cover
        passive = x_p1 + x_p2
        alpha_q = 0
        if signal and passive > 0:
            # same arithmetic as apply_alpha_overlay, without building partitions
            if not -1.0 <= signal <= 1.0:
                raise ValueError(f"signal must lie in [-1, 1], got {signal}")
            amt = abs(signal) * dcfg.overlay_fraction * passive
            passive -= amt
            extra = 0.0
            if signal > 0:
                extra = amt
                rest_p1 = x_p1 - amt
                if signal > dcfg.signal_threshold and rest_p1 > 0:
                    # a strong signal also takes the priority passive shares
                    extra += rest_p1
                    passive -= rest_p1
            if room > 0:
                alpha_q = floor_shares(extra)
                if alpha_q > room:
                    alpha_q = room
        if cover:
            children.append(ChildOrder("aggressive", cover, "cover"))
        if alpha_q > 0:
            children.append(ChildOrder("aggressive", alpha_q, "alpha"))
        passive = floor_shares(passive)
        if passive > room - alpha_q:
            passive = room - alpha_q
        if passive > 0:
            children.append(ChildOrder("passive", passive, "passive"))
    if strategy.dark_allowed and not (comp is Compliance.ABOVE_MAX and dcfg.pause_all_venues):
        d = part.x_d
        left = state.total_shares - filled
        d = floor_shares(d if d < left else left)
        if d:
            children.append(ChildOrder("dark", d, "dark"))
    rep = DriverTickReport(t, bands, filled, part, comp, signal, tuple(children), filled)
    return children, rep


def run_order(strategy: Strategy, order: Order, tape: MarketTape, sim: SimConfig,
              dcfg: Optional[DriverConfig] = None) -> OrderRun:
    """Run one order tick by tick until it completes or its window closes."""
    # The loop allocates tens of thousands of small acyclic records; pausing
    # the cyclic collector avoids repeated full-heap scans as they pile up.
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        return _run_order(strategy, order, tape, sim, dcfg)
    finally:
        if was_enabled:
            gc.enable()


def _run_order(strategy: Strategy, order: Order, tape: MarketTape, sim: SimConfig,
               dcfg: Optional[DriverConfig]) -> OrderRun:
    dcfg = DriverConfig() if dcfg is None else dcfg
    L = tape.lists()
    t_end = order.end_time if order.end_time is not None else L["time"][-1]
    start = tape.index_of(order.start_time + 1e-9)
    signals = signal_series(tape, order, sim, dcfg)
    state = ExecutionState(order.total_shares)
    arrival = L["mid"][start - 1] if start > 0 else sim.price0
    run = OrderRun(state, arrival_mid=arrival, start_index=start)
    stop = int(np.searchsorted(tape.time, t_end + 1e-9, side="right"))
    table = strategy.band_table(tape.time[start:stop])
    observes = type(strategy).observe is not Strategy.observe
    x0 = strategy.x0
    side, times, append = order.side, L["time"], run.reports.append
    t_stop = t_end + 1e-9
    i = start
    for i in range(start, len(tape)):
        t = times[i]
        if t > t_stop:
            i -= 1
            break
        if observes:
            strategy.observe(tape, i, order)
        bands = None
        if table is not None:
            k = i - start
            off = strategy.offset
            if off:
                bands = BandSet.clamped(t, table[0][k] + off, table[1][k] + off,
                                        table[2][k] + off, x0)
            else:
                bands = BandSet(t, table[0][k], table[1][k], table[2][k], x0)
        children, rep = drive_tick(strategy, state, t, signals[i], dcfg, bands)
        shift = 0.0
        if children:
            for f in execute_children(children, tape, i, side, sim):
                state.add(f)
                if f.venue is Venue.DARK:
                    strategy.on_block(f.qty)
                    shift += f.qty
        rep.filled_after = state.filled
        if shift:
            rep.bands_after = strategy.bands(t)
            rep.dark_shift = shift
        else:
            rep.bands_after = rep.bands
        append(rep)
        if state.complete:
            break
    run.stop_index = i + 1
    return run


def compliance_fraction(run: OrderRun, exclude_after_shift: int = 1) -> float:
    """Fraction of ticks ending with the position inside the bands.

    Ticks at, or within ``exclude_after_shift`` ticks after, a dark block
    band shift are left out.
    """
    ok = n = 0
    skip = -1
    for k, r in enumerate(run.reports):
        if r.dark_shift:
            skip = k + exclude_after_shift
            continue
        if k <= skip:
            continue
        n += 1
        b = r.bands_after or r.bands
        ok += b.x_min <= r.filled_after <= b.x_max
    return ok / n if n else 1.0


__all__ = [
    "Strategy", "VwapStrategy", "PovStrategy", "IsStrategy", "StrategyError", "DriverConfig",
    "DriverTickReport", "OrderRun", "drive_tick", "run_order", "signal_at", "signal_series",
    "compliance_fraction",
]
