import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bandsched.shortfall import (
    ImpactParams, IsBandDurations, PowerLawSchedule, RiskParams, VolumeDistribution,
    anchored_band_durations, band_durations, duration_exponent, executed, gamma_fn,
    golden_section, impact_cost, is_bands_at, lognormal_moments, optimal_duration,
    optimal_participation, optimal_shape, optimal_shortfall, optimize, powerlaw_kernel_cost,
    residual, shape_factor, timing_risk_sq, total_cost,
)

import oracles

X0, A = 1.0e6, 5.0
EXAMPLE = ImpactParams(i0=0.1, beta=0.5, sigma_d=0.0113, p0=24.7, v_d=7.0e7)


def risk(p=EXAMPLE, aversion=A, x0=X0):
    return RiskParams.from_aversion(aversion, p, x0)


def kw(p):
    return dict(i0=p.i0, beta=p.beta, sigma_d=p.sigma_d, p0=p.p0, v_d=p.v_d)


# --- trajectory -----------------------------------------------------------

def test_residual_examples():
    s = PowerLawSchedule(X0, 0.037, 1.0)
    assert residual(s, 0.0) == X0
    assert residual(s, 0.0185) == pytest.approx(X0 / 2)
    assert residual(s, 0.05) == 0
    assert residual(PowerLawSchedule(X0, 0.037, 1.65), 0.0185) == pytest.approx(318_800, rel=1e-3)
    assert executed(s, 0.0185) == pytest.approx(X0 / 2)


def test_schedule_validation():
    with pytest.raises(ValueError):
        PowerLawSchedule(X0, 0.0)
    with pytest.raises(ValueError):
        PowerLawSchedule(X0, 1.0, 0.5)


@given(st.floats(1, 10), st.floats(0, 1), st.floats(0, 1))
def test_residual_non_increasing(nu, a, b):
    s = PowerLawSchedule(X0, 0.5, nu)
    lo, hi = sorted((a, b))
    assert residual(s, hi) <= residual(s, lo)


# --- impact and risk ------------------------------------------------------

def test_shape_factor_linear_is_one():
    assert shape_factor(1.0, 0.5) == 1.0
    assert impact_cost(0.3, 1.0, EXAMPLE, X0) == pytest.approx(
        EXAMPLE.i0 * EXAMPLE.sigma_d * X0 * EXAMPLE.p0 * (X0 / (0.3 * EXAMPLE.v_d)) ** EXAMPLE.beta)


def test_impact_cost_example_inputs():
    assert impact_cost(0.037, 1.0, EXAMPLE, X0) == pytest.approx(17_340, rel=1e-3)


def test_impact_cost_rejects_bad_duration():
    with pytest.raises(ValueError):
        impact_cost(0.0, 1.0, EXAMPLE, X0)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.2, 1.0), st.floats(1.0, 4.0), st.floats(0.01, 1.0))
def test_impact_cost_matches_quadrature(beta, nu, T):
    p = ImpactParams(i0=0.3, beta=beta, sigma_d=0.02, p0=40.0, v_d=5e6)
    ref = oracles.impact_cost_quad(T, nu, x0=2e5, **kw(p))
    assert oracles.rel_err(impact_cost(T, nu, p, 2e5), ref) < 1e-6


@pytest.mark.parametrize("nu", [0.0, 1.0, 1.65, 3.7])
def test_timing_risk_matches_quadrature(nu):
    T = 0.2
    ref = oracles.timing_risk_sq_quad(T, nu, EXAMPLE.sigma_d, EXAMPLE.p0, X0)
    assert oracles.rel_err(timing_risk_sq(T, nu, EXAMPLE, X0), ref) < 1e-9


def test_timing_risk_linear_and_doubling():
    base = (EXAMPLE.sigma_d * X0 * EXAMPLE.p0) ** 2
    assert timing_risk_sq(0.1, 1.0, EXAMPLE, X0) == pytest.approx(base * 0.1 / 3)
    assert timing_risk_sq(0.2, 1.7, EXAMPLE, X0) == pytest.approx(2 * timing_risk_sq(0.1, 1.7, EXAMPLE, X0))


def test_dimensional_scaling():
    double = ImpactParams(i0=0.1, beta=0.5, sigma_d=2 * 0.0113, p0=2 * 24.7, v_d=7e7)
    assert impact_cost(0.05, 1.3, double, X0) == pytest.approx(4 * impact_cost(0.05, 1.3, EXAMPLE, X0))
    assert timing_risk_sq(0.05, 1.3, double, X0) == pytest.approx(
        16 * timing_risk_sq(0.05, 1.3, EXAMPLE, X0))


def test_total_cost_risk_neutral_limit():
    # rho = sigma X0 P0 / A grows without bound as the aversion goes to zero
    r = risk(aversion=1e-12)
    assert total_cost(0.05, 1.0, EXAMPLE, r, X0) == pytest.approx(impact_cost(0.05, 1.0, EXAMPLE, X0),
                                                                rel=1e-9)


def test_total_cost_diverges_at_zero_duration():
    r = risk()
    costs = [total_cost(T, 1.0, EXAMPLE, r, X0) for T in (1e-2, 1e-4, 1e-6, 1e-8)]
    assert all(b > 5 * a for a, b in zip(costs, costs[1:]))


def test_total_cost_against_direct_evaluation():
    T, nu = 0.04, 1.4
    ref = oracles.total_cost_direct(T, nu, x0=X0, aversion=A, **kw(EXAMPLE))
    assert oracles.rel_err(total_cost(T, nu, EXAMPLE, risk(), X0), ref) < 1e-8


# --- optimal duration and participation -----------------------------------

def test_optimal_duration_worked_example():
    assert optimal_duration(EXAMPLE, A, X0) == pytest.approx(0.037, abs=5e-4)


def test_optimal_duration_is_the_numerical_minimizer():
    r = risk()
    t_num = oracles.argmin_duration(lambda T: total_cost(T, 1.0, EXAMPLE, r, X0), 1e-4, 1.0)
    assert oracles.rel_err(optimal_duration(EXAMPLE, A, X0), t_num) < 1e-3


def test_optimal_duration_scaling():
    assert optimal_duration(EXAMPLE, A, 8 * X0) == pytest.approx(2 * optimal_duration(EXAMPLE, A, X0))
    b = EXAMPLE.beta
    assert optimal_duration(EXAMPLE, 2 * A, X0) == pytest.approx(
        optimal_duration(EXAMPLE, A, X0) * 2 ** (-1 / (b + 1)))


def test_optimal_participation():
    p_opt = optimal_participation(EXAMPLE, A, X0)
    t_opt = optimal_duration(EXAMPLE, A, X0)
    assert p_opt == pytest.approx(0.38, abs=5e-3)
    assert p_opt * t_opt * EXAMPLE.v_d == pytest.approx(X0, rel=1e-14)
    b = EXAMPLE.beta
    direct = (A / (6 * b * EXAMPLE.i0)) ** (1 / (b + 1)) * (X0 / EXAMPLE.v_d) ** (1 / (b + 1))
    assert p_opt == pytest.approx(direct, rel=1e-12)


# --- shape ------------------------------------------------------------------

def test_optimal_shape_worked_example():
    t_opt = optimal_duration(EXAMPLE, A, X0)
    res = optimal_shape(t_opt, EXAMPLE, risk(), X0)
    assert res.nu == pytest.approx(1.65, abs=0.05)
    assert not res.at_boundary
    f = lambda v: total_cost(t_opt, v, EXAMPLE, risk(), X0)  # noqa: E731
    assert abs(res.nu - oracles.argmin_grid(f, 1.001, 10.0, 1e-3)) < 2e-3


def test_shape_goes_linear_when_risk_neutral():
    # the impact-only shape factor is minimized at the linear schedule
    grid_nu = oracles.argmin_grid(lambda v: shape_factor(v, EXAMPLE.beta), 1.001, 10.0, 1e-3)
    res = optimal_shape(0.037, EXAMPLE, risk(aversion=1e-9), X0)
    assert abs(res.nu - grid_nu) < 2e-3


def test_shape_boundary_is_flagged():
    res = optimal_shape(0.037, EXAMPLE, risk(aversion=1e7), X0)
    assert res.at_boundary and res.nu == pytest.approx(10, abs=1e-3)


def test_golden_section_on_known_function():
    x, fx = golden_section(lambda v: (v - 2.345) ** 2 + 1, 0, 10, 1e-8)
    assert x == pytest.approx(2.345, abs=1e-7) and fx == pytest.approx(1)
    # minimum on the boundary
    x, _ = golden_section(lambda v: v, 1, 5, 1e-6)
    assert x == pytest.approx(1, abs=1e-5)


# --- optimal shortfall ------------------------------------------------------

def test_optimal_shortfall_is_impact_at_optimal_duration():
    for nu in (1.0, 1.65, 3.0):
        assert optimal_shortfall(EXAMPLE, A, X0, nu) == pytest.approx(
            impact_cost(optimal_duration(EXAMPLE, A, X0), nu, EXAMPLE, X0), rel=1e-12)


def test_optimal_shortfall_per_share_scaling():
    x1, x2 = 1e5, 4e6
    c1 = optimal_shortfall(EXAMPLE, A, x1) / (x1 * EXAMPLE.p0)
    c2 = optimal_shortfall(EXAMPLE, A, x2) / (x2 * EXAMPLE.p0)
    assert math.log(c2 / c1) / math.log(x2 / x1) == pytest.approx(1 / 3, abs=1e-6)


def test_optimal_shortfall_impact_scale():
    doubled = ImpactParams(i0=0.2, beta=0.5, sigma_d=0.0113, p0=24.7, v_d=7e7)
    ratio = optimal_shortfall(doubled, A, X0) / optimal_shortfall(EXAMPLE, A, X0)
    assert ratio == pytest.approx(2 ** (1 / 1.5), rel=1e-12)


# --- power-law kernel -------------------------------------------------------

def test_gamma_function_accuracy():
    for x in (0.1, 0.5, 1.0, 2.5, 7.3, 11.9):
        ref = math.exp(math.lgamma(x))
        assert oracles.rel_err(gamma_fn(x), ref) < 1e-10
    assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)


def test_kernel_cost_independent_of_duration_when_exponents_sum_to_one():
    p = ImpactParams(i0=0.1, beta=0.4, sigma_d=0.0113, p0=24.7, v_d=7e7, gamma=0.6)
    vals = [powerlaw_kernel_cost(T, 1.5, p, X0) for T in (0.01, 0.1, 0.7)]
    assert vals == pytest.approx([vals[0]] * 3, rel=1e-12)


def test_kernel_cost_near_delta_kernel_matches_quadrature():
    p = ImpactParams(i0=0.1, beta=0.5, sigma_d=0.0113, p0=24.7, v_d=7e7, gamma=0.01)
    ref = oracles.powerlaw_cost_quad(0.05, 1.0, x0=X0, g0=1.0, gamma=0.01, **kw(p))
    assert oracles.rel_err(powerlaw_kernel_cost(0.05, 1.0, p, X0), ref) < 1e-3


@pytest.mark.parametrize("T, nu, beta, gamma", [
    (0.037, 1.65, 0.5, 0.5), (0.5, 1.0, 0.3, 0.2), (0.1, 3.2, 0.8, 0.7),
])
def test_kernel_cost_matches_quadrature(T, nu, beta, gamma):
    p = ImpactParams(i0=0.1, beta=beta, sigma_d=0.0113, p0=24.7, v_d=7e7, g0=0.7, gamma=gamma)
    ref = oracles.powerlaw_cost_quad(T, nu, x0=X0, g0=0.7, gamma=gamma, **kw(p))
    assert oracles.rel_err(powerlaw_kernel_cost(T, nu, p, X0), ref) < 1e-3


def test_impact_params_validation():
    with pytest.raises(ValueError):
        ImpactParams(i0=0.1, beta=0.5, sigma_d=0.01, p0=10, v_d=1e6, gamma=1.0)
    with pytest.raises(ValueError):
        ImpactParams(i0=0.1, beta=1.5, sigma_d=0.01, p0=10, v_d=1e6)
    with pytest.raises(ValueError):
        ImpactParams(i0=0.1, beta=0.5, sigma_d=None or 0.0, p0=10, v_d=1e6)


# --- volume uncertainty -----------------------------------------------------

def test_lognormal_degenerate_limit():
    mean, std = lognormal_moments(VolumeDistribution(18.0, 1e-9), 0.5)
    assert mean == pytest.approx(math.exp(-9.0), rel=1e-12)
    assert std < 1e-12


def test_lognormal_example_mean():
    mean, std = lognormal_moments(VolumeDistribution(18.0, 0.4), 0.5)
    assert mean == pytest.approx(1.3e-4, abs=0.05e-4)
    # the dispersion implied by the same inputs is about 0.25e-4
    assert std == pytest.approx(0.253e-4, abs=0.005e-4)


def test_lognormal_monte_carlo():
    dist = VolumeDistribution(18.0, 0.4)
    mean, std = lognormal_moments(dist, 1 / 3)
    mc_mean, mc_std = oracles.lognormal_power_mc(18.0, 0.4, 1 / 3, 200_000, seed=5)
    assert oracles.rel_err(mean, mc_mean) < 0.01
    assert oracles.rel_err(std, mc_std) < 0.03


def test_band_durations_quoted_moments():
    t_opt = optimal_duration(EXAMPLE, A, X0)
    dur = anchored_band_durations(t_opt, 1.3e-4, 0.4e-4, eta=1.0)
    assert dur.t_tgt == pytest.approx(0.037, abs=5e-4)
    assert dur.t_min == pytest.approx(0.025, abs=1e-3)
    assert dur.t_max == pytest.approx(0.049, abs=1e-3)


def test_band_durations_formula_path():
    dist = VolumeDistribution(18.0, 0.4)
    dur = band_durations(EXAMPLE, A, X0, dist, eta=1.0)
    w = duration_exponent(EXAMPLE.beta)
    mean, std = lognormal_moments(dist, w)
    c = X0 ** w * (6 * EXAMPLE.beta * EXAMPLE.i0 / A) ** (1 / (EXAMPLE.beta + 1))
    assert (dur.t_min, dur.t_tgt, dur.t_max) == pytest.approx(
        (c * (mean - std), c * mean, c * (mean + std)))
    same = band_durations(EXAMPLE, A, X0, dist, eta=0.0)
    assert same.t_min == same.t_tgt == same.t_max


def test_band_durations_small_dispersion_limit():
    mu = math.log(EXAMPLE.v_d)
    dur = band_durations(EXAMPLE, A, X0, VolumeDistribution(mu, 1e-6), eta=1.0)
    assert dur.t_tgt == pytest.approx(optimal_duration(EXAMPLE, A, X0), rel=1e-9)


def test_band_durations_reject_collapse():
    with pytest.raises(ValueError):
        band_durations(EXAMPLE, A, X0, VolumeDistribution(18.0, 0.4), eta=10.0)
    with pytest.raises(ValueError):
        anchored_band_durations(0.037, 1.3e-4, 0.4e-4, eta=4.0)


# --- bands ------------------------------------------------------------------

DUR = IsBandDurations(0.025745459299245432, 0.037187885654465624, 0.04863031200968582,
                      nu=1.6585264714695724)


def test_is_bands_endpoints():
    b = is_bands_at(DUR, X0, 0.0)
    assert (b.x_min, b.x_tgt, b.x_max) == (0, 0, 0)
    b = is_bands_at(DUR, X0, DUR.t_max)
    assert (b.x_min, b.x_tgt, b.x_max) == (X0, X0, X0)


def test_is_bands_regression_anchor():
    # hand evaluation of X0 * (1 - (1 - t/T)^nu) at t = 0.02 for the three durations
    b = is_bands_at(DUR, X0, 0.02)
    assert b.x_max == pytest.approx(916_886, abs=1)
    assert b.x_tgt == pytest.approx(721_967, abs=1)
    assert b.x_min == pytest.approx(584_659, abs=1)


@given(st.floats(0, 0.2))
def test_is_bands_nested(t):
    b = is_bands_at(DUR, X0, t)
    assert 0 <= b.x_min <= b.x_tgt <= b.x_max <= X0


def test_optimize_report():
    out = optimize(EXAMPLE, A, X0, VolumeDistribution(18.0, 0.4), moments=(1.3e-4, 0.4e-4),
                   anchor=True)
    assert out["t_opt"] == pytest.approx(0.037, abs=5e-4)
    assert out["p_opt"] == pytest.approx(0.38, abs=5e-3)
    assert out["nu_opt"] == pytest.approx(1.65, abs=0.05)
    assert out["t_min"] == pytest.approx(0.025, abs=1e-3)
    assert out["t_max"] == pytest.approx(0.049, abs=1e-3)
    assert out["total_cost_bps"] == pytest.approx(out["total_cost"] / (X0 * 24.7) * 1e4)
    assert np.isfinite(list(v for v in out.values() if isinstance(v, float))).all()
