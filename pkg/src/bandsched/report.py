"""Output files for backtests: trajectory, fills, tick reports and metrics.

Every file carries a ``schema_version``. Floats are written with ``repr`` so
that they re-parse to the identical value, and JSON keys are sorted, which
makes two runs from the same config and seed byte-identical.
"""
from __future__ import annotations

import csv
import json
import os
from typing import Iterable, List, Optional, Sequence

from .core import FillRecord, Side, Venue
from .discrete import ScheduleRun
from .driver import OrderRun, compliance_fraction

SCHEMA_VERSION = 1

TRAJECTORY_COLUMNS = ["schema_version", "t", "x_min", "x_tgt", "x_max", "x_f"]
FILL_COLUMNS = ["schema_version", "time", "qty", "price", "venue", "aggressive"]


class ReportError(OSError):
    pass


def _open(path, mode="w"):
    try:
        return open(path, mode, newline="" if "b" not in mode else None)
    except OSError as exc:
        raise ReportError(f"cannot open {path}: {exc.strerror or exc}") from exc


def _f(x: float) -> str:
    return repr(float(x))


def trajectory_rows(run: OrderRun) -> List[tuple]:
    """``(t, x_min, x_tgt, x_max, x_f)`` per tick, before the tick trades.

    A closing row repeats the last tick's time with the bands and position
    after its fills, so the ``x_f`` column runs from 0 to the final fill.
    """
    rows = [(r.time, r.bands.x_min, r.bands.x_tgt, r.bands.x_max, r.filled)
            for r in run.reports]
    if run.reports:
        r = run.reports[-1]
        b = r.bands_after or r.bands
        rows.append((r.time, b.x_min, b.x_tgt, b.x_max, r.filled_after))
    return rows


def schedule_trajectory_rows(run: ScheduleRun, t0: float) -> List[tuple]:
    """Bin-boundary trajectory of a discrete run, starting from an empty position."""
    rows = [(t0, 0.0, 0.0, 0.0, 0.0)]
    for row, b in zip(run.ledger, run.bands):
        rows.append((row.t_end, b.x_min, b.x_tgt, b.x_max, row.filled))
    return rows


def write_trajectory_csv(path, rows: Iterable[tuple]) -> None:
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for row in rows:
            w.writerow([SCHEMA_VERSION] + [_f(v) for v in row])


def read_trajectory_csv(path) -> List[tuple]:
    with _open(path, "r") as fh:
        return [tuple(float(row[c]) for c in TRAJECTORY_COLUMNS[1:])
                for row in csv.DictReader(fh)]


def write_fills_csv(path, fills: Sequence[FillRecord]) -> None:
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FILL_COLUMNS)
        for f in fills:
            w.writerow([SCHEMA_VERSION, _f(f.time), _f(f.qty), _f(f.price), f.venue.value,
                        int(f.aggressive)])


def read_fills_csv(path) -> List[FillRecord]:
    with _open(path, "r") as fh:
        return [FillRecord(float(r["time"]), float(r["qty"]), float(r["price"]),
                           Venue(r["venue"]), bool(int(r["aggressive"])))
                for r in csv.DictReader(fh)]


def tick_record(r) -> dict:
    b, a = r.bands, (r.bands_after or r.bands)
    return {
        "schema_version": SCHEMA_VERSION,
        "t": r.time,
        "x_min": b.x_min, "x_tgt": b.x_tgt, "x_max": b.x_max,
        "filled": r.filled,
        "x_a": r.partition.x_a, "x_p1": r.partition.x_p1, "x_p2": r.partition.x_p2,
        "x_d": r.partition.x_d,
        "compliance": r.compliance.value,
        "signal": r.signal,
        "actions": [[c.kind, c.qty, c.reason] for c in r.actions],
        "filled_after": r.filled_after,
        "x_min_after": a.x_min, "x_max_after": a.x_max,
        "dark_shift": r.dark_shift,
    }


def write_ticks_jsonl(path, run: OrderRun) -> None:
    with _open(path) as fh:
        for r in run.reports:
            fh.write(json.dumps(tick_record(r), sort_keys=True))
            fh.write("\n")


def fill_metrics(fills: Sequence[FillRecord], side: Side, x0: float,
                 market_vwap: Optional[float], arrival_mid: Optional[float]) -> dict:
    """Execution-quality metrics from the fills alone.

    Slippage and shortfall are in basis points with the usual sign
    convention: positive is a cost, for buys and sells alike.
    """
    qty = sum(f.qty for f in fills)
    notional = sum(f.qty * f.price for f in fills)
    dark = sum(f.qty for f in fills if f.venue is Venue.DARK)
    avg = notional / qty if qty > 0 else None
    out = {
        "filled": qty,
        "x0": x0,
        "complete": abs(qty - x0) <= 1e-6,
        "avg_price": avg,
        "n_fills": len(fills),
        "dark_fill_fraction": dark / qty if qty > 0 else 0.0,
        "aggressive_fraction": (sum(f.qty for f in fills if f.aggressive) / qty
                                if qty > 0 else 0.0),
        "market_vwap": market_vwap,
        "arrival_mid": arrival_mid,
        "vwap_slippage_bps": None,
        "shortfall_bps": None,
    }
    if avg is not None and market_vwap:
        out["vwap_slippage_bps"] = side.sign * (avg - market_vwap) / market_vwap * 1e4
    if avg is not None and arrival_mid:
        out["shortfall_bps"] = side.sign * (avg - arrival_mid) / arrival_mid * 1e4
    return out


def run_metrics(run: OrderRun, tape, side: Side, **extra) -> dict:
    """Metrics for a continuous-driver run, including band compliance."""
    m = fill_metrics(run.state.fills, side, run.state.total_shares,
                     tape.vwap(run.start_index, run.stop_index), run.arrival_mid)
    m["compliance_fraction"] = compliance_fraction(run)
    m["n_ticks"] = len(run.reports)
    m["schema_version"] = SCHEMA_VERSION
    m.update(extra)
    return m


def write_json(path, obj: dict) -> None:
    with _open(path) as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_json(path) -> dict:
    with _open(path, "r") as fh:
        return json.load(fh)


def ensure_dir(path) -> str:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise ReportError(f"cannot create output directory {path}: {exc.strerror or exc}") from exc
    return str(path)


def write_run(out_dir, run: OrderRun, tape, side: Side,
              formats: Sequence[str] = ("trajectory", "fills", "ticks", "metrics"),
              **extra) -> dict:
    """Write the requested outputs of a continuous run; returns the metrics."""
    ensure_dir(out_dir)
    metrics = run_metrics(run, tape, side, **extra)
    if "trajectory" in formats:
        write_trajectory_csv(os.path.join(out_dir, "trajectory.csv"), trajectory_rows(run))
    if "fills" in formats:
        write_fills_csv(os.path.join(out_dir, "fills.csv"), run.state.fills)
    if "ticks" in formats:
        write_ticks_jsonl(os.path.join(out_dir, "ticks.jsonl"), run)
    if "metrics" in formats:
        write_json(os.path.join(out_dir, "metrics.json"), metrics)
    return metrics


__all__ = [
    "SCHEMA_VERSION", "ReportError", "trajectory_rows", "schedule_trajectory_rows",
    "write_trajectory_csv", "read_trajectory_csv", "write_fills_csv", "read_fills_csv",
    "tick_record", "write_ticks_jsonl", "fill_metrics", "run_metrics", "write_json",
    "read_json", "ensure_dir", "write_run",
]
