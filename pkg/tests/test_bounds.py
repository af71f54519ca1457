import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rbattractor.bounds import (
    AttractorBounds,
    BoundConstants,
    DegenerateCurveError,
    attractor_bounds,
    bounds_from_dict,
    build_curve_f,
    build_curve_g,
    eval_f,
    eval_g,
    nudging_thresholds,
    sample_curves,
    thresholds,
)
from rbattractor.params import PhysParams, lambda1, params_from_ra_pr

RAS = (1e4, 1e5, 1e6, 1e7, 1e8)


@pytest.fixture(scope="module")
def b6():
    return attractor_bounds(params_from_ra_pr(1e6, 1.0, 2.0))


def rel(a, b):
    return abs(a - b) / abs(b)


# lambda1 and the closed-form scalars ---------------------------------------------


@pytest.mark.parametrize("L, want", [(2.0, math.pi**2 / 4), (1.0, math.pi**2 / 4), (4.0, math.pi**2 / 16)])
def test_lambda1_examples(L, want):
    assert lambda1(L) == pytest.approx(want, rel=1e-15)


def test_unit_viscosity_enstrophy_bound():
    b = attractor_bounds(PhysParams(1.0, 1.0, 2.0))
    assert b.z_max == pytest.approx(16 / math.pi**2, rel=1e-14)


def test_mean_flow_enters_kinetic_energy_bound():
    lam = math.pi**2 / 4
    b = attractor_bounds(PhysParams(1.0, 1.0, 2.0), alpha=3.0)
    assert b.u_l2_sq_max == pytest.approx(4 / lam**2 + 9 * 4, rel=1e-14)


def test_ra_1e6_values(b6):
    # frozen from a direct evaluation done outside the package
    assert b6.lambda1 == pytest.approx(2.4674011002723395, rel=1e-14)
    assert b6.z_max == pytest.approx(16e6 / math.pi**2, rel=1e-14)
    assert rel(b6.z_max, 1.6211e6) < 1e-4
    assert rel(b6.theta_max_scaling, 6.4846e12) < 1e-4
    assert b6.theta_used == b6.theta_max_scaling


def test_rigorous_form_feeds_the_curves():
    p = params_from_ra_pr(1e5, 1.0, 2.0)
    b = attractor_bounds(p, theta_form="rigorous-K2")
    assert b.theta_used == b.theta_K2
    assert b.curve_f.theta_bound_used == b.theta_K2
    with pytest.raises(ValueError, match="theta_form"):
        attractor_bounds(p, theta_form="loose")


@pytest.mark.parametrize("ra", RAS)
def test_theta_k2_within_twice_scaling(ra):
    b = attractor_bounds(params_from_ra_pr(ra, 1.0, 2.0))
    assert b.theta_K2 <= 2 * b.theta_max_scaling


@given(st.floats(3.0, 9.0), st.floats(0.05, 1.0))
def test_scalars_increase_with_ra(log_ra, step):
    lo = attractor_bounds(params_from_ra_pr(10**log_ra, 1.0, 2.0))
    hi = attractor_bounds(params_from_ra_pr(10 ** (log_ra + step), 1.0, 2.0))
    for name in AttractorBounds.SCALARS:
        if name == "lambda1":
            assert hi.lambda1 == lo.lambda1
        else:
            assert getattr(hi, name) > getattr(lo, name), name


@pytest.mark.parametrize("ra", [1e120, 1e200])
def test_extreme_ra_raises_overflow(ra):
    with pytest.raises(OverflowError, match="theta_K2|q_max|eta_max|z_max"):
        attractor_bounds(params_from_ra_pr(ra, 1.0, 2.0))


def test_degenerate_regime_keeps_scalars():
    b = attractor_bounds(PhysParams(1.0, 1.0, 2.0))
    assert b.curve_f is None and b.curve_g is None
    assert math.isnan(b.q2_exact) and math.isnan(b.eta1_exact)
    with pytest.raises(DegenerateCurveError):
        b.require_curves()
    doc = json.loads(json.dumps(b.as_dict(), allow_nan=False))
    assert doc["q2_exact"] is None
    back = bounds_from_dict(doc)
    assert back.degenerate == b.degenerate and back.z_max == b.z_max


def test_as_dict_is_json_and_round_trips(b6):
    doc = json.loads(json.dumps(b6.as_dict()))
    assert doc["log10"]["z_max"] == pytest.approx(math.log10(b6.z_max))
    assert bounds_from_dict(doc) == b6


# constants ---------------------------------------------------------------------


def test_constant_defaults_and_derived_c4():
    c = BoundConstants()
    assert (c.c1, c.c2, c.c_agmon, c.c3, c.c4) == (1.0, 1.0, 1.0, 2.0, 4.0)
    c = BoundConstants(c1=0.5, c_agmon=3.0)
    assert c.c3 == 0.5 and c.c4 == 6.0


@pytest.mark.parametrize("kw", [{"c1": 0.0}, {"c2": -1.0}, {"c_agmon": float("nan")}, {"c3": 0.0}])
def test_constants_must_be_positive(kw):
    with pytest.raises(ValueError):
        BoundConstants(**kw)


# curve F ------------------------------------------------------------------------


def _bisect(fn, lo, hi):
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        if fn(lo) * fn(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@pytest.mark.parametrize("ra", RAS)
def test_z2_ratio_by_independent_bisection(ra):
    cf = attractor_bounds(params_from_ra_pr(ra, 1.0, 2.0)).curve_f
    assert cf.z2 / cf.z1 == pytest.approx(25 / 64, rel=1e-14)
    par2 = lambda z: cf.f2(z) - (2 * cf.c2 * z / cf.nu) ** 2  # noqa: E731
    z2 = _bisect(par2, 0.2 * cf.z1, 0.6 * cf.z1)
    assert abs(z2 / cf.z1 - 25 / 64) <= 1e-10


@pytest.mark.parametrize("ra", RAS)
def test_curve_f_endpoints_and_continuity(ra):
    cf = attractor_bounds(params_from_ra_pr(ra, 1.0, 2.0)).curve_f
    assert eval_f(cf, 0.0) == 0.0
    assert rel(eval_f(cf, cf.z0), cf.q0) <= 1e-12
    assert rel(cf.f1(cf.z1), cf.q1) <= 1e-9
    assert rel(cf.f2(cf.z1), cf.q1) <= 1e-9
    assert rel(cf.f2(cf.z2), cf.q2) <= 1e-9
    assert rel(cf.f3(cf.z2), cf.q2) <= 1e-9
    assert rel(cf.q2, (2 * cf.c2 * cf.z2 / cf.nu) ** 2) <= 1e-12
    z1_cap = (
        1.5 * cf.z0 ** (4 / 3)
        + 4 * cf.nu ** (2 / 3) * cf.c2 ** (-4 / 3) * cf.z0 ** (1 / 3) * cf.theta_bound_used ** (1 / 3)
    ) ** 0.75
    assert cf.z1 <= z1_cap


@pytest.mark.parametrize("ra", (1e2, 1e5, 1e8))
def test_curve_f_shape(ra):
    cf = attractor_bounds(params_from_ra_pr(ra, 1.0, 2.0)).curve_f
    tol = 1e-12 * cf.q2

    z = np.linspace(cf.z1, cf.z0, 4001)
    y = cf.f1(z)
    assert np.all(np.diff(y) <= tol)
    assert np.all(np.diff(y, 2) >= -tol)

    z = np.linspace(cf.z2, cf.z1, 4001)
    assert np.all(np.diff(cf.f2(z)) <= tol)

    z = np.linspace(0.0, cf.z2, 4001)
    y = cf.f3(z)
    assert np.all(np.diff(y) >= -tol)
    assert np.all(np.diff(y, 2) <= tol)

    # both lower branches are tangent to the horizontal line q = q2 at z2
    h = 1e-6 * cf.z2
    for branch in (cf.f2, cf.f3):
        slope = (branch(cf.z2 + h) - branch(cf.z2 - h)) / (2 * h)
        assert abs(slope) * cf.z2 <= 1e-4 * cf.q2

    zz = np.linspace(0.0, cf.z0, 20001)
    assert eval_f(cf, zz).max() <= cf.q2 * (1 + 1e-12)


@pytest.mark.parametrize("ra", RAS)
def test_curve_f_stays_above_dissipation_boundary(ra):
    b = attractor_bounds(params_from_ra_pr(ra, 1.0, 2.0))
    z, f, _, _ = sample_curves(b.curve_f, b.curve_g, n_samples=400, decades=12)
    assert np.all(f >= b.curve_f.region_boundary(z) * (1 - 1e-12))


def test_eval_f_rejects_out_of_range(b6):
    cf = b6.curve_f
    with pytest.raises(ValueError):
        eval_f(cf, -1.0)
    with pytest.raises(ValueError):
        eval_f(cf, cf.z0 * 1.01)
    assert isinstance(eval_f(cf, 0.5 * cf.z2), float)
    assert eval_f(cf, np.array([0.0, cf.z0])).shape == (2,)


def test_degenerate_curve_reports_comparands():
    p = params_from_ra_pr(1e4, 1.0, 2.0)
    with pytest.raises(DegenerateCurveError) as info:
        build_curve_f(p, BoundConstants(c2=1e-6), 1e3)
    assert info.value.q0 >= info.value.parabola_at_z0


def test_curve_f_needs_positive_theta():
    with pytest.raises(ValueError):
        build_curve_f(params_from_ra_pr(1e4, 1.0, 2.0), BoundConstants(), 0.0)


# curve G ------------------------------------------------------------------------


@pytest.mark.parametrize("ra", RAS)
def test_curve_g_identities(ra):
    b = attractor_bounds(params_from_ra_pr(ra, 1.0, 2.0))
    cg = b.curve_g
    assert rel(float(cg.g1(cg.theta_max)), cg.eta0) <= 1e-14
    assert rel(cg.eta1, cg.gamma * cg.phi1) <= 1e-12
    # g1(φ) = γφ is linear: solve it in one step
    phi1 = (cg.eta0 + cg.gamma0 * cg.theta_max) / (cg.gamma + cg.gamma0)
    assert rel(phi1, cg.phi1) <= 1e-12
    assert rel(float(cg.g2(cg.phi1)), cg.eta1) <= 1e-10
    assert cg.gamma0 == pytest.approx(4 ** (-1 / 3) * cg.gamma, rel=1e-15)
    assert math.isfinite(cg.eta1)
    assert cg.eta1 >= float(cg.g3(cg.theta_max)) * cg.gamma / (cg.gamma + cg.gamma0)


@pytest.mark.parametrize("ra", (1e4, 1e6, 1e8))
def test_curve_g_bounded_and_continuous(ra):
    cg = attractor_bounds(params_from_ra_pr(ra, 1.0, 2.0)).curve_g
    phi = np.linspace(0.0, cg.theta_max, 20001)
    g = eval_g(cg, phi)
    assert np.all(g <= cg.eta1 * (1 + 1e-12))
    assert np.all(g >= cg.g3(phi) * (1 - 1e-15))
    left = phi[phi <= cg.phi1]
    assert np.all(cg.g2(left) <= cg.eta1 * (1 + 1e-12))
    right = phi[phi >= cg.phi1]
    assert np.all(cg.g1(right) >= cg.g3(right) * (1 - 1e-12))
    eps = 1e-9 * cg.phi1
    assert rel(eval_g(cg, cg.phi1 - eps), eval_g(cg, cg.phi1 + eps)) <= 1e-8


def test_eval_g_clamps_phi(b6):
    cg = b6.curve_g
    assert eval_g(cg, 10 * cg.theta_max) == eval_g(cg, cg.theta_max)
    assert eval_g(cg, -5.0) == eval_g(cg, 0.0)
    assert eval_g(cg, 0.0) == pytest.approx(float(cg.g3(0.0)))


def test_curve_g_needs_positive_inputs():
    p = params_from_ra_pr(1e4, 1.0, 2.0)
    with pytest.raises(ValueError):
        build_curve_g(p, BoundConstants(), 0.0, 1.0)


# sampling and thresholds -----------------------------------------------------------


def test_sample_curves_endpoints_and_monotone_grid(b6):
    z, f, phi, g = sample_curves(b6.curve_f, b6.curve_g, n_samples=2)
    assert z[-1] == b6.curve_f.z0 and phi[-1] == b6.curve_g.theta_max
    assert len(z) == len(phi) == 2
    z, f, phi, g = sample_curves(b6.curve_f, b6.curve_g, n_samples=50)
    assert np.all(np.diff(z) > 0) and np.all(np.diff(phi) > 0)
    assert f.shape == g.shape == (50,)
    with pytest.raises(ValueError):
        sample_curves(b6.curve_f, b6.curve_g, n_samples=1)


def test_thresholds_unit_substitution():
    th = thresholds(1.0, 1.0, 1.0, 0.0, 0.0, 0.0)
    assert th.K1 == 3.0 and th.K2 == 3.0
    assert th.h_star == pytest.approx(1 / math.sqrt(3))


def test_k1_dominant_term_with_observed_palinstrophy():
    p = params_from_ra_pr(1e6, 1.0, 2.0)
    th = thresholds(p.nu, p.kappa, p.lambda1, 1e5, 0.0, 0.0)
    assert 1 / (p.nu * p.kappa**2) == pytest.approx(1e9, rel=1e-12)
    assert 1 / (p.nu * p.kappa**2) > 0.9 * th.K1


def test_rigorous_k1_is_dominated_by_palinstrophy(b6):
    p = params_from_ra_pr(1e6, 1.0, 2.0)
    th = nudging_thresholds(p, b6)
    assert b6.q2_exact / p.nu > 0.99 * th.K1
    assert th.K2 > th.K1


def test_h_star_shrinks_with_ra():
    def h(ra):
        p = params_from_ra_pr(ra, 1.0, 2.0)
        return nudging_thresholds(p, attractor_bounds(p)).h_star

    assert h(1e6) < h(1e4)
