"""Band geometry, filled-position state and the residual-share partition.

Everything here is strategy-agnostic: a strategy only has to say where its
three trajectories (minimum, target, maximum) sit at the current time, and
the partition below turns that plus the filled position into aggressive,
passive and dark allocations.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional


class Side(enum.Enum):
    BUY = "buy"
    SELL = "sell"

    @property
    def sign(self) -> int:
        return 1 if self is Side.BUY else -1


class Venue(enum.Enum):
    DISPLAYED = "displayed"
    DARK = "dark"


class Compliance(enum.Enum):
    BELOW_MIN = "below_min"
    WITHIN = "within"
    ABOVE_MAX = "above_max"


class BandError(ValueError):
    """Raised when band or fill inputs violate their invariants."""


# absolute slack for float noise on share counts
_EPS = 1e-9


@dataclass(frozen=True)
class Order:
    side: Side
    total_shares: float
    start_time: float = 0.0
    end_time: Optional[float] = None
    limit_price: Optional[float] = None

    def __post_init__(self):
        if not self.total_shares > 0:
            raise BandError(f"total_shares must be positive, got {self.total_shares}")
        if self.end_time is not None and not self.end_time > self.start_time:
            raise BandError("end_time must be strictly after start_time")

    def within_limit(self, price: float) -> bool:
        """True if a print at ``price`` is inside the order's limit."""
        if self.limit_price is None:
            return True
        if self.side is Side.BUY:
            return price <= self.limit_price
        return price >= self.limit_price


@dataclass(frozen=True, slots=True)
class BandSet:
    t: float
    x_min: float
    x_tgt: float
    x_max: float
    x0: float

    def __post_init__(self):
        if not (-_EPS <= self.x_min <= self.x_tgt + _EPS
                and self.x_tgt <= self.x_max + _EPS
                and self.x_max <= self.x0 + _EPS):
            raise BandError(
                f"band ordering violated: 0 <= {self.x_min} <= {self.x_tgt} "
                f"<= {self.x_max} <= {self.x0}"
            )

    @classmethod
    def clamped(cls, t: float, x_min: float, x_tgt: float, x_max: float, x0: float) -> "BandSet":
        """Build a band set after clamping each trajectory into ``[0, x0]``.

        The target is also squeezed into ``[x_min, x_max]`` so that rounding
        noise in upstream formulas cannot produce an out-of-order triple.
        """
        lo = 0.0 if x_min < 0.0 else (x0 if x_min > x0 else x_min)
        hi = lo if x_max < lo else (x0 if x_max > x0 else x_max)
        tgt = lo if x_tgt < lo else (hi if x_tgt > hi else x_tgt)
        return cls(t, lo, tgt, hi, x0)

    @property
    def width(self) -> float:
        return self.x_max - self.x_min


@dataclass(frozen=True, slots=True)
class FillRecord:
    time: float
    qty: float
    price: float
    venue: Venue
    aggressive: bool

    def __post_init__(self):
        if not self.qty > 0:
            raise BandError(f"fill qty must be positive, got {self.qty}")
        if not self.price > 0:
            raise BandError(f"fill price must be positive, got {self.price}")


@dataclass
class ExecutionState:
    """Filled position of one order. Mutated only by that order's driver."""

    total_shares: float
    filled: float = 0.0
    fills: List[FillRecord] = field(default_factory=list)

    def add(self, fill: FillRecord) -> None:
        if self.filled + fill.qty > self.total_shares + _EPS:
            raise BandError(
                f"fill of {fill.qty} would overfill order ({self.filled}/{self.total_shares})"
            )
        self.fills.append(fill)
        self.filled += fill.qty

    @property
    def remaining(self) -> float:
        return self.total_shares - self.filled

    @property
    def complete(self) -> bool:
        return self.remaining <= _EPS


class SharePartition(NamedTuple):
    """Aggressive, priority passive, discretionary passive and dark-only shares."""

    x_a: float
    x_p1: float
    x_p2: float
    x_d: float

    @property
    def x_p(self) -> float:
        return self.x_p1 + self.x_p2


def compute_partition(bands: BandSet, filled: float) -> SharePartition:
    """Split the order residual given the filled position.

    Aggressive shares cover any shortfall below the lower band. Passive
    shares are the room left up to the upper band, split at the target into
    a priority part (``x_p1``) and a discretionary part (``x_p2``). Shares
    above the upper band are available only to dark venues.
    """
    if filled < -_EPS or filled > bands.x0 + _EPS:
        raise BandError(f"filled={filled} outside [0, {bands.x0}]")
    x_min = bands.x_min
    if filled < x_min:
        floor, x_a = x_min, x_min - filled
    else:
        floor, x_a = filled, 0.0
    x_p = bands.x_max - floor
    x_p1 = bands.x_tgt - floor
    if x_p < 0:
        x_p = 0.0
    if x_p1 < 0:
        x_p1 = 0.0
    return SharePartition(x_a, x_p1, x_p - x_p1, bands.x0 - bands.x_max)


def band_compliance(bands: BandSet, filled: float) -> Compliance:
    # boundaries are inclusive
    if filled < bands.x_min:
        return Compliance.BELOW_MIN
    if filled > bands.x_max:
        return Compliance.ABOVE_MAX
    return Compliance.WITHIN


def apply_block_fill(bands: BandSet, block: float, x0: Optional[float] = None) -> BandSet:
    """Shift every trajectory up by a dark block execution, clamped at ``x0``."""
    if not block > 0:
        raise BandError(f"block must be positive, got {block}")
    x0 = bands.x0 if x0 is None else x0
    return BandSet.clamped(bands.t, bands.x_min + block, bands.x_tgt + block,
                           bands.x_max + block, x0)


def ceil_shares(x: float) -> int:
    """Smallest whole share count covering ``x`` (tolerant to float noise)."""
    x -= 1e-6
    if x <= 0:
        return 0
    n = int(x)
    return n + 1 if n < x else n


def floor_shares(x: float) -> int:
    """Largest whole share count not exceeding ``x`` (tolerant to float noise)."""
    x += 1e-6
    return int(x) if x > 0 else 0


def shift_bands(bands: BandSet, offset: float) -> BandSet:
    """Like :func:`apply_block_fill` but accepts a zero offset."""
    if offset == 0:
        return bands
    return apply_block_fill(bands, offset)


__all__ = [
    "Side", "Venue", "Compliance", "BandError", "Order", "BandSet", "FillRecord",
    "ExecutionState", "SharePartition", "compute_partition", "band_compliance",
    "apply_block_fill", "shift_bands", "ceil_shares", "floor_shares",
]
