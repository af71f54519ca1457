import math
from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rbattractor.analysis import (
    inflation_between,
    inflation_exponent,
    region_check,
    sharpness_ratios,
    trajectory_extrema,
)
from rbattractor.bounds import attractor_bounds, eval_f, eval_g
from rbattractor.params import params_from_ra_pr
from rbattractor.rbsolver import DiagnosticsRecord


def rec(t, **kw):
    base = dict(u_l2_sq=1.0, z=1.0, q=1.0, phi=1.0, eta=1.0, zeta=0.0, xi=0.0, theta_l2=1.0, theta_max=1.0, alpha=0.0)
    base.update(kw)
    return DiagnosticsRecord(t=float(t), **base)


@pytest.fixture(scope="module")
def b5():
    return attractor_bounds(params_from_ra_pr(1e5, 1.0, 2.0))


# extrema --------------------------------------------------------------------------


def test_extrema_of_constant_series():
    ext = trajectory_extrema([rec(t, z=2.0, q=3.0, phi=4.0, eta=5.0) for t in range(200)], 50.0)
    assert (ext.max_z, ext.max_q, ext.max_phi, ext.max_eta, ext.max_u_l2_sq) == (2.0, 3.0, 4.0, 5.0, 1.0)
    assert ext.n_samples == 150


def test_extrema_exclude_transient_spike():
    series = [rec(t, z=1e6 if t == 10 else 1.0) for t in range(200)]
    assert trajectory_extrema(series, 20.0).max_z == 1.0
    assert trajectory_extrema(series, 0.0).max_z == 1e6


def test_extrema_need_enough_samples():
    with pytest.raises(ValueError, match="100"):
        trajectory_extrema([rec(t) for t in range(150)], 60.0)
    assert trajectory_extrema([rec(t) for t in range(150)], 60.0, min_samples=10).n_samples == 90


@given(st.lists(st.floats(0.0, 1e12), min_size=100, max_size=300), st.floats(0.0, 50.0))
def test_extrema_match_brute_force(values, t_cut):
    series = [rec(i, q=v) for i, v in enumerate(values)]
    kept = [v for i, v in enumerate(values) if i >= t_cut]
    if len(kept) < 10:
        return
    assert trajectory_extrema(series, t_cut, min_samples=10).max_q == max(kept)


# inflation exponent ------------------------------------------------------------------


def test_beta_reproduces_two_decade_arithmetic():
    assert inflation_exponent(3.14e6 / 7.05e4) == pytest.approx(0.824, abs=1e-3)
    assert inflation_exponent(1.0) == 0.0
    assert inflation_exponent(100.0) == pytest.approx(1.0)


@given(st.floats(1e-6, 1e12), st.floats(1e-6, 1e12))
def test_beta_is_log_linear(a, b):
    assert inflation_exponent(a * b) == pytest.approx(inflation_exponent(a) + inflation_exponent(b), abs=1e-9)


def test_beta_rejects_nonpositive():
    for bad in (0.0, -1.0, math.nan):
        with pytest.raises(ValueError):
            inflation_exponent(bad)


def test_inflation_between_runs(b5):
    b6 = attractor_bounds(params_from_ra_pr(1e6, 1.0, 2.0))
    ext = trajectory_extrema([rec(t, z=10.0, q=100.0, phi=10.0, eta=1000.0) for t in range(100)], 0.0)
    low = sharpness_ratios(ext, b5)
    high = sharpness_ratios(ext, b6)
    beta = inflation_between(low, high, 1e5, 1e6)
    # identical observations: the exponent is the Ra-scaling of the bound itself
    assert beta["z"] == pytest.approx(math.log10(b6.z_max / b5.z_max))
    assert set(beta) == {"z", "phi", "q", "eta"}


# sharpness ratios -----------------------------------------------------------------------


def test_sharpness_ratios_definitions(b5):
    ext = trajectory_extrema([rec(t, z=10.0, q=100.0, phi=10.0, eta=1000.0) for t in range(100)], 0.0)
    exact = sharpness_ratios(ext, b5, "exact")
    assert exact.ratio_z == pytest.approx(b5.z_max / 10.0)
    assert exact.ratio_phi == pytest.approx(b5.theta_used / 10.0)
    assert exact.ratio_q == pytest.approx(b5.q2_exact / 100.0)
    assert exact.ratio_eta == pytest.approx(b5.eta1_exact / 1000.0)
    assert exact.beta_z == pytest.approx(inflation_exponent(exact.ratio_z))
    assert exact.all_above_one
    scaling = sharpness_ratios(ext, b5, "scaling")
    assert scaling.ratio_q == pytest.approx(b5.q_max_scaling / 100.0)
    assert scaling.ratio_eta == pytest.approx(b5.eta_max_scaling / 1000.0)
    assert exact.as_dict()["all_above_one"] is True
    with pytest.raises(ValueError):
        sharpness_ratios(ext, b5, "loose")


@given(st.floats(1.01, 1e3))
def test_ratios_grow_when_bounds_grow(scale):
    b = attractor_bounds(params_from_ra_pr(1e5, 1.0, 2.0))
    bigger = replace(b, z_max=b.z_max * scale, q2_exact=b.q2_exact * scale)
    ext = trajectory_extrema([rec(t, z=10.0, q=100.0) for t in range(100)], 0.0)
    assert sharpness_ratios(ext, bigger).ratio_z > sharpness_ratios(ext, b).ratio_z
    assert sharpness_ratios(ext, bigger).ratio_q > sharpness_ratios(ext, b).ratio_q


# region check -------------------------------------------------------------------------


def test_region_check_accepts_interior_points(b5):
    cf, cg = b5.curve_f, b5.curve_g
    series = [
        rec(t, z=0.5 * cf.z2, q=0.5 * eval_f(cf, 0.5 * cf.z2), phi=0.1 * cg.theta_max, eta=0.5 * eval_g(cg, 0.1 * cg.theta_max))
        for t in range(50)
    ]
    assert region_check(series, cf, cg, 0.0) == []


def test_region_check_flags_every_inflated_sample(b5):
    cf, cg = b5.curve_f, b5.curve_g
    inside = dict(z=0.5 * cf.z2, q=1.0, phi=1.0, eta=1.0)
    series = [rec(t, **inside) for t in range(20)]
    series[12] = rec(12, z=inside["z"], q=1e10 * cf.q2, phi=1.0, eta=1e10 * cg.eta1)
    series[15] = rec(15, z=1e10 * cf.z0, q=1.0, phi=1e10 * cg.theta_max, eta=1.0)
    series[3] = rec(3, z=1e10 * cf.z0, q=1.0, phi=1.0, eta=1.0)
    found = region_check(series, cf, cg, t_transient=5.0)
    assert sorted((v.index, v.quantity) for v in found) == [(12, "eta"), (12, "q"), (15, "phi"), (15, "z")]
    v = next(v for v in found if v.quantity == "z")
    assert v.t == 15.0 and v.bound == cf.z0


def test_region_check_tolerance(b5):
    cf, cg = b5.curve_f, b5.curve_g
    z = 0.5 * (cf.z2 + cf.z1)
    edge = eval_f(cf, z)
    assert region_check([rec(0, z=z, q=edge * (1 + 1e-9))], cf, cg, 0.0) == []
    assert len(region_check([rec(0, z=z, q=edge * (1 + 1e-5))], cf, cg, 0.0)) == 1


def test_region_check_needs_post_transient_samples(b5):
    with pytest.raises(ValueError):
        region_check([rec(t) for t in range(10)], b5.curve_f, b5.curve_g, 100.0)
