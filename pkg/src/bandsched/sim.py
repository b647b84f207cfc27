"""Deterministic synthetic market and tactic fill simulator.

A session is a fixed grid of ticks. Each tick carries a quote, the displayed
volume printed during the tick (at most one aggregated trade) and at most one
dark crossing opportunity. The whole tape is a pure function of the config,
seed included, so runs can be replayed byte for byte.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterator, List, NamedTuple, Optional, Sequence, Union

import numpy as np

from .core import FillRecord, SharePartition, Side, Venue, ceil_shares, floor_shares
from .discrete import TacticOrder
from .vwap import DEFAULT_BINS, u_shape_weights

# sub-stream tags for SeedSequence
_SESSION_STREAM = 0
_HISTORY_STREAM = 1


@dataclass(frozen=True)
class SimConfig:
    seed: int = 7
    session_length: float = 23400.0
    tick_interval: float = 1.0
    spread: float = 0.02
    daily_vol: float = 0.0113
    price0: float = 24.7
    daily_volume: float = 7.0e7
    volume_dispersion: float = 0.4
    mean_reversion: float = 0.3
    dark_arrival_rate: float = 3.0
    dark_block_mean: float = 20000.0
    passive_fill_coeff: float = 0.02
    # impact of our own aggressive orders (instantaneous power law)
    impact_i0: float = 0.1
    impact_beta: float = 0.5
    # log-volume noise: per 5-minute bin, per tick, and a day-level open/close tilt
    bin_seconds: float = 300.0
    bin_noise: float = 0.25
    tick_noise: float = 0.5
    tilt_noise: float = 0.4
    profile_depth: float = 0.6

    def __post_init__(self):
        if self.session_length <= 0 or self.tick_interval <= 0:
            raise ValueError("session_length and tick_interval must be positive")
        n = self.session_length / self.tick_interval
        if abs(n - round(n)) > 1e-9:
            raise ValueError("session_length must be a whole number of ticks")
        if self.spread <= 0 or self.price0 <= 0 or self.daily_volume <= 0:
            raise ValueError("spread, price0 and daily_volume must be positive")
        if self.daily_vol < 0 or self.volume_dispersion < 0:
            raise ValueError("volatility parameters must be >= 0")
        if not -1 <= self.mean_reversion <= 1:
            raise ValueError("mean_reversion must lie in [-1, 1]")
        if not 0 < self.passive_fill_coeff <= 1:
            raise ValueError("passive_fill_coeff must lie in (0, 1]")
        if self.dark_arrival_rate < 0 or self.dark_block_mean <= 0:
            raise ValueError("dark liquidity parameters out of range")

    @property
    def n_ticks(self) -> int:
        return int(round(self.session_length / self.tick_interval))


@dataclass(frozen=True)
class MarketEvent:
    time: float
    kind: str  # "quote", "trade" or "dark"
    bid: Optional[float] = None
    ask: Optional[float] = None
    price: Optional[float] = None
    qty: Optional[float] = None


@dataclass
class MarketTape:
    """Per-tick market arrays. Index ``i`` covers ``(time[i-1], time[i]]``."""

    time: np.ndarray
    bid: np.ndarray
    ask: np.ndarray
    trade_qty: np.ndarray
    trade_price: np.ndarray
    dark_qty: np.ndarray
    dark_price: np.ndarray
    tick_interval: float
    # cached python lists for the per-tick driver loop
    _lists: dict = field(default_factory=dict, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.time)

    @property
    def mid(self) -> np.ndarray:
        return 0.5 * (self.bid + self.ask)

    def lists(self) -> dict:
        if not self._lists:
            for name in ("time", "bid", "ask", "trade_qty", "trade_price", "dark_qty",
                         "dark_price"):
                self._lists[name] = getattr(self, name).tolist()
            self._lists["mid"] = self.mid.tolist()
            self._lists["logmid"] = np.log(self.mid).tolist()
        return self._lists

    def events(self) -> Iterator[MarketEvent]:
        L = self.lists()
        for i in range(len(self)):
            t = L["time"][i]
            yield MarketEvent(t, "quote", bid=L["bid"][i], ask=L["ask"][i])
            if L["trade_qty"][i] > 0:
                yield MarketEvent(t, "trade", price=L["trade_price"][i], qty=L["trade_qty"][i])
            if L["dark_qty"][i] > 0:
                yield MarketEvent(t, "dark", price=L["dark_price"][i], qty=L["dark_qty"][i])

    def index_of(self, t: float) -> int:
        """First tick whose time is ``>= t``."""
        return int(np.searchsorted(self.time, t - 1e-9, side="left"))

    def vwap(self, start: int, stop: int) -> float:
        q = self.trade_qty[start:stop]
        tot = q.sum()
        if tot <= 0:
            return float("nan")
        return float((q * self.trade_price[start:stop]).sum() / tot)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "kind", "bid", "ask", "price", "qty"])
            for ev in self.events():
                w.writerow([repr(ev.time), ev.kind, _fmt(ev.bid), _fmt(ev.ask),
                            _fmt(ev.price), _fmt(ev.qty)])

    @classmethod
    def from_csv(cls, path, tick_interval: Optional[float] = None) -> "MarketTape":
        """Load a tape; every tick needs a quote, trades and dark crosses are optional."""
        quotes, trades, darks = {}, {}, {}
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                t = float(row["time"])
                kind = row["kind"]
                if kind == "quote":
                    quotes[t] = (float(row["bid"]), float(row["ask"]))
                elif kind == "trade":
                    q, p = float(row["qty"]), float(row["price"])
                    if t in trades:
                        oq, op = trades[t]
                        trades[t] = (oq + q, (oq * op + q * p) / (oq + q))
                    else:
                        trades[t] = (q, p)
                elif kind == "dark":
                    q, p = float(row["qty"]), float(row["price"])
                    oq, _ = darks.get(t, (0.0, p))
                    darks[t] = (oq + q, p)
                else:
                    raise ValueError(f"{path}: unknown event kind {kind!r}")
        times = np.array(sorted(quotes))
        if len(times) == 0:
            raise ValueError(f"{path}: tape has no quotes")
        if tick_interval is None:
            tick_interval = float(np.median(np.diff(times))) if len(times) > 1 else 1.0

        def col(d, j):
            return np.array([d.get(t, (0.0, 0.0))[j] for t in times])

        bid = np.array([quotes[t][0] for t in times])
        ask = np.array([quotes[t][1] for t in times])
        unknown = (set(trades) | set(darks)) - set(quotes)
        if unknown:
            raise ValueError(f"{path}: trade/dark events without a quote at {sorted(unknown)[:3]}")
        return cls(times, bid, ask, col(trades, 0), col(trades, 1), col(darks, 0), col(darks, 1),
                   tick_interval)


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def _rng(cfg: SimConfig, stream: int, *extra: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([cfg.seed, stream, *extra]))


def _tick_volumes(cfg: SimConfig, rng: np.random.Generator) -> np.ndarray:
    n = cfg.n_ticks
    ticks_per_bin = max(1, int(round(cfg.bin_seconds / cfg.tick_interval)))
    n_bins = int(math.ceil(n / ticks_per_bin))
    w = u_shape_weights(n_bins, cfg.profile_depth)
    x = (np.arange(n_bins) + 0.5) / n_bins
    tilt = cfg.tilt_noise * rng.standard_normal()
    w = w * np.exp(tilt * (x - 0.5))
    w = w / w.sum()
    sb = cfg.bin_noise
    w = w * np.exp(sb * rng.standard_normal(n_bins) - sb * sb / 2)
    day = math.exp(cfg.volume_dispersion * rng.standard_normal() - cfg.volume_dispersion ** 2 / 2)
    per_tick = np.repeat(w / ticks_per_bin, ticks_per_bin)[:n]
    per_tick = per_tick / per_tick.sum()
    st = cfg.tick_noise
    noise = np.exp(st * rng.standard_normal(n) - st * st / 2)
    return np.rint(cfg.daily_volume * day * per_tick * noise)


def generate_market(cfg: SimConfig) -> MarketTape:
    """Generate one seeded session tape."""
    rng = _rng(cfg, _SESSION_STREAM)
    n = cfg.n_ticks
    dt = cfg.tick_interval / cfg.session_length
    vol = _tick_volumes(cfg, rng)

    # AR(1) log-returns with unconditional variance sigma_D^2 * dt; a positive
    # mean_reversion gives negatively autocorrelated increments
    phi = -0.3 * cfg.mean_reversion
    s = cfg.daily_vol * math.sqrt(dt)
    eps = rng.standard_normal(n) * s * math.sqrt(1 - phi * phi)
    r = np.empty(n)
    prev = 0.0
    for i in range(n):
        prev = phi * prev + eps[i]
        r[i] = prev
    mid = cfg.price0 * np.exp(np.cumsum(r) - 0.5 * s * s * np.arange(1, n + 1))
    if cfg.daily_vol == 0:
        mid = np.full(n, cfg.price0)
    half = cfg.spread / 2
    bid, ask = mid - half, mid + half
    buyer = rng.random(n) < 0.5
    trade_price = np.where(buyer, ask, bid)
    trade_price = np.where(vol > 0, trade_price, 0.0)

    dark_qty = np.zeros(n)
    dark_price = np.zeros(n)
    if cfg.dark_arrival_rate > 0:
        t = rng.exponential(1.0 / cfg.dark_arrival_rate)
        while t < 1.0:
            i = min(n - 1, int(t * n))
            dark_qty[i] += max(1.0, math.ceil(rng.exponential(cfg.dark_block_mean)))
            dark_price[i] = mid[i]
            t += rng.exponential(1.0 / cfg.dark_arrival_rate)

    times = cfg.tick_interval * np.arange(1, n + 1)
    return MarketTape(times, bid, ask, vol, trade_price, dark_qty, dark_price, cfg.tick_interval)


def simulate_history(cfg: SimConfig, n_days: int, n_points: int = DEFAULT_BINS + 1) -> np.ndarray:
    """Normalized cumulative volume curves for ``n_days`` past sessions.

    Drawn from the same volume model as :func:`generate_market` but on an
    independent seed stream, so today's session is never in its own history.
    """
    grid = np.linspace(0.0, cfg.session_length, n_points)
    out = np.empty((n_days, n_points))
    for d in range(n_days):
        vol = _tick_volumes(cfg, _rng(cfg, _HISTORY_STREAM, d))
        cum = np.concatenate([[0.0], np.cumsum(vol)])
        tick_t = cfg.tick_interval * np.arange(cfg.n_ticks + 1)
        u = np.interp(grid, tick_t, cum)
        out[d] = (u - u[0]) / (u[-1] - u[0])
        out[d, -1] = 1.0
    return out


def impact_price(qty: float, duration: float, cfg: SimConfig) -> float:
    """Temporary impact (price units) of trading ``qty`` over ``duration`` seconds."""
    if qty <= 0:
        return 0.0
    rate = qty / (duration / cfg.session_length)
    return cfg.impact_i0 * cfg.daily_vol * cfg.price0 * (rate / cfg.daily_volume) ** cfg.impact_beta


class ChildOrder(NamedTuple):
    kind: str  # "aggressive", "passive" or "dark"
    qty: int
    reason: str = ""


def _aggressive_fill(tape: MarketTape, i: int, qty: int, side: Side, duration: float,
                     cfg: SimConfig) -> FillRecord:
    L = tape.lists()
    j = impact_price(qty, duration, cfg)
    if side is Side.BUY:
        px = L["ask"][i] + j
    else:
        px = max(L["bid"][i] - j, 1e-6)
    return FillRecord(L["time"][i], float(qty), px, Venue.DISPLAYED, True)


def execute_children(children: Sequence[ChildOrder], tape: MarketTape, i: int, side: Side,
                     cfg: SimConfig) -> List[FillRecord]:
    """Fill one tick's child orders against tick ``i``."""
    L = tape.lists()
    t = L["time"][i]
    fills = []
    for kind, qty, _ in children:
        if qty <= 0:
            continue
        if kind == "aggressive":
            fills.append(_aggressive_fill(tape, i, qty, side, tape.tick_interval, cfg))
        elif kind == "passive":
            q = floor_shares(cfg.passive_fill_coeff * L["trade_qty"][i])
            if q > qty:
                q = qty
            if q > 0:
                px = L["bid"][i] if side is Side.BUY else L["ask"][i]
                fills.append(FillRecord(t, float(q), px, Venue.DISPLAYED, False))
        elif kind == "dark":
            avail = L["dark_qty"][i]
            if avail > 0:
                q = qty if qty < avail else int(avail)
                fills.append(FillRecord(t, float(q), L["dark_price"][i], Venue.DARK, False))
        else:
            raise ValueError(f"unknown child order kind {kind!r}")
    return fills


def partition_children(part: SharePartition) -> List[ChildOrder]:
    """Whole-share child orders for a partition: cover rounds up, the rest down."""
    return [
        ChildOrder("aggressive", ceil_shares(part.x_a), "cover"),
        ChildOrder("passive", floor_shares(part.x_p1 + part.x_p2), "passive"),
        ChildOrder("dark", floor_shares(part.x_d), "dark"),
    ]


def simulate_tactic(slice_: Union[TacticOrder, SharePartition], tape: MarketTape, start: int,
                    stop: int, cfg: SimConfig, side: Side) -> List[FillRecord]:
    """Simulate a tactic over ticks ``[start, stop)``.

    A :class:`SharePartition` is exposed on every tick of the window:
    aggressive shares fill at once, passive shares fill at the near quote at
    ``passive_fill_coeff`` times the printed volume, dark shares fill against
    crossing opportunities at the midpoint. A :class:`TacticOrder` rests
    passively for the window, and any part of its minimum fill still missing
    on the last tick is completed aggressively (the clean-up).
    """
    if stop <= start:
        return []
    if isinstance(slice_, SharePartition):
        children = partition_children(slice_)
        fills: List[FillRecord] = []
        left = {c.kind: c.qty for c in children}
        for i in range(start, stop):
            tick = [ChildOrder(k, q) for k, q in left.items() if q > 0]
            got = execute_children(tick, tape, i, side, cfg)
            for f in got:
                kind = "aggressive" if f.aggressive else ("dark" if f.venue is Venue.DARK else "passive")
                left[kind] -= int(f.qty)
            fills.extend(got)
        return fills

    order = slice_
    if order.qty == 0:
        return []
    q = tape.trade_qty[start:stop]
    cap = np.floor(cfg.passive_fill_coeff * q + 1e-6)
    cum = np.minimum(np.cumsum(cap), order.qty)
    step = np.diff(np.concatenate([[0.0], cum]))
    L = tape.lists()
    near = L["bid"] if side is Side.BUY else L["ask"]
    fills = [FillRecord(L["time"][start + k], float(s), near[start + k], Venue.DISPLAYED, False)
             for k, s in enumerate(step.tolist()) if s > 0]
    done = int(cum[-1]) if len(cum) else 0
    short = order.min_fill - done
    if short > 0:
        fills.append(_aggressive_fill(tape, stop - 1, short, side, tape.tick_interval, cfg))
    return fills


def alpha_signal(prices: Sequence[float], side: Side, mean_reversion: float,
                 r_scale: float) -> float:
    """Short-term signal in ``[-1, 1]``; positive means trade now.

    The push is the log return over the window. With ``mean_reversion > 0``
    a drop is expected to revert, which favors buying now; with a negative
    coefficient the push is expected to continue.
    """
    if len(prices) == 0:
        raise ValueError("empty price window")
    if mean_reversion == 0 or len(prices) < 2:
        return 0.0
    r = math.log(prices[-1] / prices[0])
    return _signal_from_return(r, side, mean_reversion, r_scale)


def _signal_from_return(r: float, side: Side, mean_reversion: float, r_scale: float) -> float:
    s = -side.sign * mean_reversion * r / r_scale
    return max(-1.0, min(1.0, s))


def apply_alpha_overlay(part: SharePartition, s: float, lam: float) -> SharePartition:
    """Shift passive shares toward aggressive (``s > 0``) or withhold them (``s < 0``).

    A buy signal moves ``s * lam`` of the passive shares to the aggressive
    bucket, priority passive first. A sell signal pulls the same fraction off
    the market, discretionary passive first; band accounting is unaffected.
    """
    if not -1 <= s <= 1:
        raise ValueError(f"signal must lie in [-1, 1], got {s}")
    if not 0 <= lam <= 1:
        raise ValueError(f"overlay fraction must lie in [0, 1], got {lam}")
    amt = abs(s) * lam * (part.x_p1 + part.x_p2)
    if amt == 0:
        return part
    if s > 0:
        from_p1 = min(amt, part.x_p1)
        return SharePartition(part.x_a + amt, part.x_p1 - from_p1, part.x_p2 - (amt - from_p1),
                              part.x_d)
    from_p2 = min(amt, part.x_p2)
    return SharePartition(part.x_a, part.x_p1 - (amt - from_p2), part.x_p2 - from_p2, part.x_d)


__all__ = [
    "SimConfig", "MarketEvent", "MarketTape", "generate_market", "simulate_history",
    "impact_price", "ChildOrder", "execute_children", "partition_children",
    "simulate_tactic", "alpha_signal", "apply_alpha_overlay",
]
