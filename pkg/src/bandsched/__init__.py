"""Execution scheduling within uncertainty bands.

A schedule is three cumulative trajectories, minimum, target and maximum
shares filled, and the execution engine keeps the filled position between
the outer two. The modules cover the band geometry (:mod:`.core`), VWAP,
POV and implementation-shortfall band sources (:mod:`.vwap`, :mod:`.pov`,
:mod:`.shortfall`), a discrete bin scheduler (:mod:`.discrete`), a seeded
market simulator (:mod:`.sim`), the continuous tick driver (:mod:`.driver`)
and reporting plus CLI plumbing.
"""
from .core import (
    BandError, BandSet, Compliance, ExecutionState, FillRecord, Order, SharePartition, Side,
    Venue, apply_block_fill, band_compliance, compute_partition,
)
from .driver import (
    DriverConfig, IsStrategy, PovStrategy, VwapStrategy, compliance_fraction, drive_tick,
    run_order,
)
from .pov import EligibleVolumeAccumulator, PovRates, pov_bands_at
from .shortfall import (
    ImpactParams, IsBandDurations, VolumeDistribution, band_durations, is_bands_at, optimize,
)
from .sim import SimConfig, generate_market
from .vwap import VolumeProfile, VwapConfig, build_profile, vwap_bands_at

__version__ = "0.1.0"

__all__ = [
    "BandError", "BandSet", "Compliance", "ExecutionState", "FillRecord", "Order",
    "SharePartition", "Side", "Venue", "apply_block_fill", "band_compliance", "compute_partition",
    "DriverConfig", "IsStrategy", "PovStrategy", "VwapStrategy", "compliance_fraction",
    "drive_tick", "run_order", "EligibleVolumeAccumulator", "PovRates", "pov_bands_at",
    "ImpactParams", "IsBandDurations", "VolumeDistribution", "band_durations", "is_bands_at",
    "optimize", "SimConfig", "generate_market", "VolumeProfile", "VwapConfig", "build_profile",
    "vwap_bands_at",
]
