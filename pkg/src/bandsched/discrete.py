"""Bin-by-bin scheduling within uncertainty bands.

The trading interval is cut into ``N`` bins of equal width in clock, volume
or trade time. At the start of each bin the scheduler hands a short-lived
tactic everything up to the upper band at the bin's end, with the lower band
as a mandatory minimum fill. Whatever the tactic leaves undone of the
mandatory part is carried into the next bin's minimum automatically, since
that minimum is measured from the realized fill.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .core import BandSet, ExecutionState, FillRecord, Order, ceil_shares, floor_shares


class Coordinate(enum.Enum):
    CLOCK = "clock"
    VOLUME = "volume"
    TRADE = "trade"


class MinFillBreach(RuntimeError):
    """The tactic returned fewer shares than its minimum fill."""


@dataclass(frozen=True)
class TacticOrder:
    qty: int
    duration: float
    min_fill: int = 0

    def __post_init__(self):
        if self.qty < 0 or not 0 <= self.min_fill <= self.qty:
            raise ValueError(f"need 0 <= min_fill <= qty, got {self.min_fill}, {self.qty}")


@dataclass(frozen=True)
class BinGrid:
    coordinate: Coordinate
    n_bins: int
    tau0: float
    tau1: float
    clock_widths: tuple = ()

    def __post_init__(self):
        if self.n_bins < 1:
            raise ValueError("need at least one bin")
        if not self.tau1 > self.tau0:
            raise ValueError("tau1 must exceed tau0")
        if self.clock_widths and (len(self.clock_widths) != self.n_bins
                                  or min(self.clock_widths) <= 0):
            raise ValueError("clock_widths must be positive, one per bin")

    @property
    def width(self) -> float:
        return (self.tau1 - self.tau0) / self.n_bins

    def boundary(self, k: int) -> float:
        return self.tau0 + k * self.width


@dataclass(frozen=True)
class BinWindow:
    """Realized bin ``k`` (1-based): tape ticks ``[start, stop)`` ending at clock ``t_end``."""

    k: int
    start: int
    stop: int
    t_end: float
    clock_width: float


def clock_grid(t0: float, t1: float, n_bins: int) -> BinGrid:
    w = (t1 - t0) / n_bins
    return BinGrid(Coordinate.CLOCK, n_bins, t0, t1, tuple([w] * n_bins))


def volume_grid(profile, t0: float, t1: float, n_bins: int) -> BinGrid:
    """Equal expected-volume bins; clock widths forecast from the mean volume curve."""
    u0, u1 = profile.mean_at(t0), profile.mean_at(t1)
    edges = [t0] + [profile.inverse_mean(u0 + (u1 - u0) * k / n_bins)
                    for k in range(1, n_bins)] + [t1]
    widths = tuple(b - a for a, b in zip(edges, edges[1:]))
    return BinGrid(Coordinate.VOLUME, n_bins, 0.0, 1.0, widths)


def realize_bins(grid: BinGrid, tape, t0: float, t1: float,
                 expected_volume: Optional[float] = None) -> List[BinWindow]:
    """Map the grid onto tape ticks.

    Clock bins are fixed in advance. Volume and trade bins end on the tick
    where cumulative printed volume (or trade count) first reaches
    ``k / N`` of its expected total; the last bin always ends at ``t1`` and
    bins not reached by then collapse onto it.
    """
    i0, i1 = tape.index_of(t0 + 1e-9), tape.index_of(t1) + 1
    i1 = min(i1, len(tape))
    if i1 <= i0:
        raise ValueError("order window holds no ticks")
    n = grid.n_bins
    if grid.coordinate is Coordinate.CLOCK:
        ends = [tape.index_of(t0 + (t1 - t0) * k / n) + 1 for k in range(1, n)]
    else:
        if grid.coordinate is Coordinate.VOLUME:
            x = np.asarray(tape.trade_qty[i0:i1], dtype=float)
            total = float(x.sum()) if expected_volume is None else expected_volume
        else:
            x = (np.asarray(tape.trade_qty[i0:i1]) > 0).astype(float)
            total = float(i1 - i0) if expected_volume is None else expected_volume
        cum = np.cumsum(x)
        ends = [i0 + int(np.searchsorted(cum, total * k / n - 1e-9, side="left")) + 1
                for k in range(1, n)]
    ends = [min(max(e, i0), i1) for e in ends] + [i1]
    out, start, prev_t = [], i0, t0
    for k, stop in enumerate(ends, start=1):
        stop = max(stop, start)
        t_end = float(tape.time[stop - 1]) if stop > i0 else t0
        if k == n:
            t_end = float(tape.time[i1 - 1])
        out.append(BinWindow(k, start, stop, t_end, t_end - prev_t))
        start, prev_t = stop, t_end
    return out


def plan_bin(k: int, filled: float, bands: BandSet, duration: float = 0.0) -> TacticOrder:
    """Tactic order for bin ``k`` given the filled position and the bin-end bands."""
    qty = floor_shares(bands.x_max - filled)
    min_fill = min(ceil_shares(bands.x_min - filled), qty) if qty > 0 else 0
    return TacticOrder(qty=qty, duration=duration, min_fill=min_fill)


@dataclass(frozen=True)
class BinLedgerRow:
    k: int
    t_end: float
    qty: int
    min_fill: int
    bin_filled: float
    filled: float
    cleanup: float
    x_min: float
    x_max: float


@dataclass
class ScheduleRun:
    state: ExecutionState
    ledger: List[BinLedgerRow] = field(default_factory=list)
    bands: List[BandSet] = field(default_factory=list)


BandSource = Callable[[int, float], BandSet]
Tactic = Callable[[TacticOrder, BinWindow], Sequence[FillRecord]]
Cover = Callable[[int, BinWindow], Sequence[FillRecord]]


def run_schedule(order: Order, bins: Sequence[BinWindow], band_source: BandSource,
                 tactic: Tactic, cover: Optional[Cover] = None) -> ScheduleRun:
    """Drive a tactic bin by bin until the order completes or the bins run out.

    ``band_source(k, t_end)`` gives the bands at the end of bin ``k``. If the
    tactic under-fills its minimum, ``cover(shares, window)`` is asked for an
    aggressive clean-up; without a cover callback the breach is raised.
    """
    state = ExecutionState(order.total_shares)
    run = ScheduleRun(state)
    for win in bins:
        if state.complete:
            break
        bands = band_source(win.k, win.t_end)
        to = plan_bin(win.k, state.filled, bands, win.clock_width)
        fills = list(tactic(to, win)) if to.qty > 0 else []
        got = sum(f.qty for f in fills)
        if got > to.qty + 1e-9:
            raise MinFillBreach(f"bin {win.k}: tactic filled {got} > qty {to.qty}")
        if got < to.min_fill - 1e-9:
            if cover is None:
                raise MinFillBreach(
                    f"bin {win.k}: tactic filled {got} of min_fill {to.min_fill} "
                    f"(qty {to.qty}, filled before {state.filled})")
            fills.extend(cover(int(to.min_fill - got), win))
        for f in fills:
            state.add(f)
        cleanup = sum(f.qty for f in fills if f.aggressive)
        run.ledger.append(BinLedgerRow(win.k, win.t_end, to.qty, to.min_fill,
                                       sum(f.qty for f in fills), state.filled, cleanup,
                                       bands.x_min, bands.x_max))
        run.bands.append(bands)
    return run


def linear_vwap_bands(x0: float, n_bins: int) -> BandSource:
    """Bands for VWAP in volume time: the bin's full linear share is optional,
    last bin's share becomes mandatory one bin later, and everything is due
    at the end."""

    def source(k: int, t_end: float) -> BandSet:
        hi = x0 * k / n_bins
        lo = x0 if k >= n_bins else x0 * (k - 1) / n_bins
        return BandSet.clamped(t_end, lo, hi, hi, x0)

    return source


def write_ledger_csv(path, ledger: Sequence[BinLedgerRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["schema_version", "bin", "t_end", "qty", "min_fill", "bin_filled", "filled",
                    "cleanup_shares", "x_min", "x_max"])
        for r in ledger:
            w.writerow([1, r.k, repr(r.t_end), r.qty, r.min_fill, repr(r.bin_filled),
                        repr(r.filled), repr(r.cleanup), repr(r.x_min), repr(r.x_max)])


__all__ = [
    "Coordinate", "MinFillBreach", "TacticOrder", "BinGrid", "BinWindow", "clock_grid",
    "volume_grid", "realize_bins", "plan_bin", "BinLedgerRow", "ScheduleRun", "run_schedule",
    "linear_vwap_bands", "write_ledger_csv",
]
