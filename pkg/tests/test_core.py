import pytest
from hypothesis import given, strategies as st

from bandsched.core import (
    BandError, BandSet, Compliance, ExecutionState, FillRecord, Order, SharePartition, Side,
    Venue, apply_block_fill, band_compliance, ceil_shares, compute_partition, floor_shares,
)


def bs(lo, tgt, hi, x0=1000.0, t=0.0):
    return BandSet(t, lo, tgt, hi, x0)


@pytest.mark.parametrize("bands, filled, expected", [
    (bs(100, 150, 200), 50, (50, 50, 50, 800)),
    (bs(0, 0, 0), 0, (0, 0, 0, 1000)),
    (bs(100, 150, 200), 200, (0, 0, 0, 800)),
    (bs(100, 150, 200), 250, (0, 0, 0, 800)),
    # inside the band, below target
    (bs(100, 150, 200), 120, (0, 30, 50, 800)),
    # between target and max: nothing left in the priority bucket
    (bs(100, 150, 200), 170, (0, 0, 30, 800)),
])
def test_partition_examples(bands, filled, expected):
    assert tuple(compute_partition(bands, filled)) == pytest.approx(expected)


@pytest.mark.parametrize("filled", [-1.0, 1000.5])
def test_partition_rejects_filled_outside_order(filled):
    with pytest.raises(BandError):
        compute_partition(bs(100, 150, 200), filled)


def test_partition_passive_total():
    p = compute_partition(bs(100, 150, 200), 50)
    assert p.x_p == p.x_p1 + p.x_p2 == 100


@pytest.mark.parametrize("filled, state", [
    (100, Compliance.WITHIN), (200, Compliance.WITHIN), (99, Compliance.BELOW_MIN),
    (201, Compliance.ABOVE_MAX), (150, Compliance.WITHIN),
])
def test_band_compliance(filled, state):
    assert band_compliance(bs(100, 150, 200), filled) is state


def test_block_fill_shifts_and_clamps():
    b = apply_block_fill(bs(100, 150, 200), 300)
    assert (b.x_min, b.x_tgt, b.x_max) == (400, 450, 500)
    b = apply_block_fill(bs(100, 150, 200), 900)
    assert (b.x_min, b.x_tgt, b.x_max) == (1000, 1000, 1000)


@pytest.mark.parametrize("block", [0.0, -5.0])
def test_block_fill_rejects_non_positive(block):
    with pytest.raises(BandError):
        apply_block_fill(bs(0, 0, 0), block)


def test_bandset_rejects_bad_ordering():
    with pytest.raises(BandError):
        bs(200, 150, 100)
    with pytest.raises(BandError):
        bs(0, 0, 1001)


def test_bandset_clamped_repairs_noise():
    b = BandSet.clamped(0.0, -3.0, 50.0, 1200.0, 1000.0)
    assert (b.x_min, b.x_tgt, b.x_max) == (0.0, 50.0, 1000.0)


def test_order_validation():
    with pytest.raises(BandError):
        Order(Side.BUY, 0)
    with pytest.raises(BandError):
        Order(Side.BUY, 100, start_time=10, end_time=10)
    buy = Order(Side.BUY, 100, limit_price=10.0)
    sell = Order(Side.SELL, 100, limit_price=10.0)
    assert buy.within_limit(10.0) and not buy.within_limit(10.01)
    assert sell.within_limit(10.0) and not sell.within_limit(9.99)
    assert Order(Side.BUY, 100).within_limit(1e9)


def test_fill_record_validation():
    with pytest.raises(BandError):
        FillRecord(0.0, 0.0, 10.0, Venue.DARK, False)
    with pytest.raises(BandError):
        FillRecord(0.0, 10.0, 0.0, Venue.DARK, False)


def test_execution_state_accounting():
    s = ExecutionState(100)
    s.add(FillRecord(1.0, 40, 10.0, Venue.DISPLAYED, True))
    s.add(FillRecord(2.0, 60, 10.0, Venue.DARK, False))
    assert s.filled == sum(f.qty for f in s.fills) == 100
    assert s.complete and s.remaining == 0
    with pytest.raises(BandError):
        s.add(FillRecord(3.0, 1, 10.0, Venue.DISPLAYED, True))


@pytest.mark.parametrize("x, lo, hi", [
    (0.0, 0, 0), (2.5, 3, 2), (3.0, 3, 3), (2.9999999999, 3, 3), (3.0000000001, 3, 3),
    (-4.0, 0, 0),
])
def test_share_rounding(x, lo, hi):
    assert ceil_shares(x) == lo
    assert floor_shares(x) == hi


band_triples = st.tuples(
    st.floats(0, 1, allow_nan=False), st.floats(0, 1, allow_nan=False),
    st.floats(0, 1, allow_nan=False)).map(sorted)


@given(band_triples, st.floats(0, 1), st.floats(1, 1e7))
def test_partition_invariants(tri, frac, x0):
    lo, tgt, hi = (v * x0 for v in tri)
    b = BandSet.clamped(0.0, lo, tgt, hi, x0)
    f = frac * x0
    p = compute_partition(b, f)
    assert min(p) >= 0
    assert (p.x_a > 0) == (f < b.x_min)
    assert p.x_p1 + p.x_p2 == pytest.approx(max(0.0, b.x_max - max(f, b.x_min)), abs=1e-6)
    assert p.x_d + b.x_max == pytest.approx(x0)


@given(band_triples, st.floats(0, 1), st.floats(0, 1))
def test_partition_monotone_in_filled(tri, f1, f2):
    x0 = 1e5
    b = BandSet.clamped(0.0, *(v * x0 for v in tri), x0)
    a, c = sorted((f1 * x0, f2 * x0))
    pa, pc = compute_partition(b, a), compute_partition(b, c)
    assert pc.x_a <= pa.x_a + 1e-9
    assert pc.x_p1 <= pa.x_p1 + 1e-9
    assert pc.x_p1 + pc.x_p2 <= pa.x_p1 + pa.x_p2 + 1e-9


@given(band_triples, st.floats(1e-3, 2.0))
def test_block_fill_preserves_width_unless_clamped(tri, block_frac):
    x0 = 1e4
    b = BandSet.clamped(0.0, *(v * x0 for v in tri), x0)
    shifted = apply_block_fill(b, block_frac * x0)
    assert shifted.x_min <= shifted.x_tgt <= shifted.x_max <= x0
    if b.x_max + block_frac * x0 <= x0:
        assert shifted.width == pytest.approx(b.width, abs=1e-7)


def test_share_partition_is_a_value():
    p = SharePartition(1.0, 2.0, 3.0, 4.0)
    assert p == SharePartition(x_a=1.0, x_p1=2.0, x_p2=3.0, x_d=4.0)
    assert p.x_p == 5.0
