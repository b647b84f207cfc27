"""Participation (POV) bands driven by eligible market volume.

Each band is the running sum of ``rate(t) * eligible_trade_qty`` over
displayed-market prints inside the order's limit, plus any dark block
executions, which shift all three bands without counting as eligible
volume.
"""
from __future__ import annotations

import bisect
import copy
import csv
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .core import BandError, BandSet, Order


@dataclass(frozen=True)
class PovRates:
    """Minimum, target and maximum participation as step functions of time.

    ``times[k]`` is the time from which ``p_min[k]``, ``p_tgt[k]`` and
    ``p_max[k]`` apply; before ``times[0]`` the first values apply.
    """

    times: Tuple[float, ...]
    p_min: Tuple[float, ...]
    p_tgt: Tuple[float, ...]
    p_max: Tuple[float, ...]

    def __post_init__(self):
        n = len(self.times)
        if n == 0 or not (len(self.p_min) == len(self.p_tgt) == len(self.p_max) == n):
            raise ValueError("rate schedules must be non-empty and equally long")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("rate change times must be strictly increasing")
        for lo, tg, hi in zip(self.p_min, self.p_tgt, self.p_max):
            if not (0 <= lo <= tg <= hi < 1):
                raise ValueError(f"need 0 <= p_min <= p_tgt <= p_max < 1, got {lo}, {tg}, {hi}")

    @classmethod
    def constant(cls, p_min: float, p_tgt: float, p_max: float) -> "PovRates":
        return cls((0.0,), (p_min,), (p_tgt,), (p_max,))

    @classmethod
    def from_target(cls, p_tgt: float, tol: float) -> "PovRates":
        return cls.constant(max(0.0, p_tgt - tol), p_tgt, p_tgt + tol)

    @classmethod
    def from_range(cls, p_min: float, p_max: float) -> "PovRates":
        return cls.constant(p_min, 0.5 * (p_min + p_max), p_max)

    def at(self, t: float) -> Tuple[float, float, float]:
        k = max(0, bisect.bisect_right(self.times, t) - 1)
        return self.p_min[k], self.p_tgt[k], self.p_max[k]


@dataclass
class EligibleVolumeAccumulator:
    """Running eligible volume and the three rate-weighted integrals.

    One accumulator belongs to one order and is updated only by that
    order's event loop; use :meth:`snapshot` to hand a copy elsewhere.
    """

    v_e: float = 0.0
    last_update: Optional[float] = None
    int_min: float = 0.0
    int_tgt: float = 0.0
    int_max: float = 0.0
    block_offset: float = 0.0

    def on_market_trade(self, trade_qty: float, trade_price: float, order: Order,
                        rates: PovRates, t: float) -> bool:
        """Account for one displayed-market print. Returns whether it was eligible."""
        if not trade_qty > 0:
            raise BandError(f"trade_qty must be positive, got {trade_qty}")
        if not order.within_limit(trade_price):
            return False
        p_min, p_tgt, p_max = rates.at(t)
        self.v_e += trade_qty
        self.int_min += p_min * trade_qty
        self.int_tgt += p_tgt * trade_qty
        self.int_max += p_max * trade_qty
        self.last_update = t
        return True

    def apply_block(self, block: float) -> None:
        if not block > 0:
            raise BandError(f"block must be positive, got {block}")
        self.block_offset += block

    def bands_at(self, x0: float, t: float = 0.0) -> BandSet:
        return pov_bands_at(self, x0, t)

    def snapshot(self) -> "EligibleVolumeAccumulator":
        return copy.copy(self)


def pov_bands_at(acc: EligibleVolumeAccumulator, x0: float, t: float = 0.0) -> BandSet:
    off = acc.block_offset
    return BandSet.clamped(t, min(x0, acc.int_min + off), min(x0, acc.int_tgt + off),
                           min(x0, acc.int_max + off), x0)


@dataclass(frozen=True)
class TapeTrade:
    time: float
    price: float
    qty: float
    venue: str = "displayed"


def read_trade_tape(path) -> List[TapeTrade]:
    """Read a ``time,price,qty,venue`` CSV with a header row."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(TapeTrade(float(row["time"]), float(row["price"]), float(row["qty"]),
                                 row.get("venue") or "displayed"))
    return out


def write_trade_tape(path, trades: Sequence[TapeTrade]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "price", "qty", "venue"])
        for tr in trades:
            w.writerow([repr(tr.time), repr(tr.price), repr(tr.qty), tr.venue])


def replay(trades: Sequence[TapeTrade], order: Order, rates: PovRates,
           acc: Optional[EligibleVolumeAccumulator] = None) -> EligibleVolumeAccumulator:
    """Feed a tape through an accumulator. Dark prints never count as eligible."""
    acc = EligibleVolumeAccumulator() if acc is None else acc
    for tr in trades:
        if tr.venue == "displayed":
            acc.on_market_trade(tr.qty, tr.price, order, rates, tr.time)
    return acc


__all__ = [
    "PovRates", "EligibleVolumeAccumulator", "pov_bands_at", "TapeTrade",
    "read_trade_tape", "write_trade_tape", "replay",
]
