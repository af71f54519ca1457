"""
Invariant batteries behind ``rbattractor verify``.

``fast`` covers the spectral, interpolant and bound oracles. ``full`` adds
the desk-scale simulation, containment, sharpness, nudging and determinism
runs. Each check returns the measured value alongside its tolerance, so the
acceptance tests can assert on numbers rather than flags.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import spectral as sp
from .analysis import region_check, sharpness_ratios, trajectory_extrema
from .bounds import BoundConstants, attractor_bounds, eval_f
from .nudging import NudgeConfig, apply_interpolant, decay_fit, make_interpolant, twin_run
from .params import lambda1, params_from_ra_pr
from .rbsolver import (
    ICSpec,
    SimConfig,
    State,
    initial_state,
    max_principle_check,
    run,
    step,
    theta0_deficit,
)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"{flag} {self.name}: {self.value:.3e} vs {self.tolerance:.3e}{extra}"


def _le(name, value, tol, detail=""):
    return Check(name, bool(value <= tol), float(value), float(tol), detail)


def _ge(name, value, tol, detail=""):
    return Check(name, bool(value >= tol), float(value), float(tol), detail)


# criterion 1: spectral oracles -----------------------------------------------------


def _trilinear(u: sp.VectorField, v_comps, w_comps) -> tuple[float, float]:
    """Σᵢ ((u·∇)vᵢ, wᵢ) with dealiased products, plus its Cauchy-Schwarz scale."""
    total, scale = 0.0, 0.0
    for vi, wi in zip(v_comps, w_comps):
        adv = sp.multiply(u.u1, sp.ddx1(vi)) + sp.multiply(u.u2, sp.ddx2(vi))
        total += sp.inner(adv, wi)
        scale += sp.norm_l2(adv) * sp.norm_l2(wi)
    return total, scale


def spectral_checks(samples: int = 20, seed: int = 2024) -> list[Check]:
    rng = np.random.default_rng(seed)
    grids = [sp.make_grid(2.0, 64, 64), sp.make_grid(4.0, 96, 48), sp.make_grid(1.0, 32, 64)]
    round_trip = leray_idem = grad_kill = tri_b0 = tri_b1 = tri_enst = 0.0
    poincare_min = math.inf
    for i in range(samples):
        g = grids[i % len(grids)]
        lam = lambda1(g.L)
        for parity in (sp.EVEN, sp.ODD):
            # full-band noise projected onto the representable subspace
            values = sp.to_physical(sp.to_spectral(rng.standard_normal(g.shape), parity, g))
            back = sp.to_physical(sp.to_spectral(values, parity, g))
            round_trip = max(round_trip, float(np.max(np.abs(back - values))) / max(1.0, np.max(np.abs(values))))
        f1 = sp.random_scalar(g, sp.EVEN, rng)
        f2 = sp.random_scalar(g, sp.ODD, rng)
        once = sp.leray_project(f1, f2)
        twice = sp.leray_project(once.u1, once.u2)
        leray_idem = max(leray_idem, sp.norm_l2(twice - once) / sp.norm_l2(once))
        p = sp.random_scalar(g, sp.EVEN, rng)
        gp = sp.leray_project(sp.ddx1(p), sp.ddx2(p))
        grad_kill = max(grad_kill, sp.norm_l2(gp) / sp.seminorm_h1(p))

        u = sp.random_solenoidal(g, rng)
        v = sp.random_solenoidal(g, rng)
        th = sp.random_scalar(g, sp.ODD, rng)
        val, scale = _trilinear(u, (v.u1, v.u2), (v.u1, v.u2))
        tri_b0 = max(tri_b0, abs(val) / scale)
        val, scale = _trilinear(u, (th,), (th,))
        tri_b1 = max(tri_b1, abs(val) / scale)
        lap = (sp.laplacian(u.u1), sp.laplacian(u.u2))
        val, scale = _trilinear(u, (u.u1, u.u2), lap)
        tri_enst = max(tri_enst, abs(val) / scale)

        low_u = sp.random_solenoidal(g, rng, kmax=1)
        for fld in (th, u.u1, sp.random_scalar(g, sp.ODD, rng, kmax=1), low_u.u1, low_u.u2):
            ratio = sp.seminorm_h1(fld) ** 2 / (lam * sp.norm_l2(fld) ** 2)
            poincare_min = min(poincare_min, ratio)
    return [
        _le("transform round trip", round_trip, 1e-13),
        _le("Leray idempotence", leray_idem, 1e-12),
        _le("Leray annihilates gradients", grad_kill, 1e-12),
        _le("b0(u,v,v) = 0", tri_b0, 1e-12),
        _le("b1(u,theta,theta) = 0", tri_b1, 1e-12),
        _le("b0(u,u,A0 u) = 0", tri_enst, 1e-12),
        _ge("Poincare ||f||^2 >= lambda1 |f|^2", poincare_min, 1.0, "min ratio"),
    ]


def interpolant_checks(seed: int = 7) -> list[Check]:
    rng = np.random.default_rng(seed)
    g = sp.make_grid(2.0, 64, 64)
    worst_const = worst_lin = worst_mean = worst_parity = worst_cell = 0.0
    const = sp.SpectralScalar(g, sp.EVEN, np.zeros(g.shape, complex))
    const.coeffs[0, 0] = 0.37
    x1, x2 = g.mesh()
    for mode in ("block-average", "nodal-sampling"):
        for m in (1, 4, 16):
            spec = make_interpolant(g, m, mode)
            out = apply_interpolant(const, spec)
            worst_const = max(worst_const, float(np.max(np.abs(out.coeffs - const.coeffs))))
            f = sp.random_scalar(g, sp.EVEN, rng, zero_mean=False)
            h = sp.random_scalar(g, sp.EVEN, rng, zero_mean=False)
            lhs = apply_interpolant(f * 2.0 + h * -3.0, spec)
            rhs = apply_interpolant(f, spec) * 2.0 + apply_interpolant(h, spec) * -3.0
            worst_lin = max(worst_lin, sp.norm_l2(lhs - rhs) / sp.norm_l2(rhs))
            par = sp.parity_project(out)
            worst_parity = max(worst_parity, float(np.max(np.abs(par.coeffs - out.coeffs))))
            if mode == "block-average":
                worst_mean = max(worst_mean, abs(sp.mean(apply_interpolant(f, spec)) - sp.mean(f)))
    # sin(πx₂) cell means against direct quadrature
    m = g.n2 // 4
    spec = make_interpolant(g, m)
    values = np.sin(np.pi * x2)
    from .nudging import interpolant_physical

    cells = interpolant_physical(values, spec)
    for a in range(0, g.n1, m):
        for b in range(0, g.n2, m):
            brute = sum(values[a + i, b + j] for i in range(m) for j in range(m)) / m**2
            worst_cell = max(worst_cell, float(np.max(np.abs(cells[a : a + m, b : b + m] - brute))))
    return [
        _le("interpolant fixes constants", worst_const, 1e-14),
        _le("interpolant linearity", worst_lin, 1e-12),
        _le("interpolant mean preservation", worst_mean, 1e-14),
        _le("interpolant parity preservation", worst_parity, 1e-14),
        _le("block cell means vs quadrature", worst_cell, 1e-12),
    ]


# criterion 2: bounds oracles -------------------------------------------------------


def _bisect(fn, lo, hi, rtol=1e-15, iters=400):
    flo = fn(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= rtol * hi:
            break
    return 0.5 * (lo + hi)


def bounds_checks(ras=(1e4, 1e5, 1e6, 1e7, 1e8), L: float = 2.0) -> list[Check]:
    consts = BoundConstants()
    ratio_err = cont = eta_err = phi1_err = 0.0
    cap_excess = k2_excess = -math.inf
    for ra in ras:
        p = params_from_ra_pr(ra, 1.0, L)
        b = attractor_bounds(p, consts)
        cf, cg = b.require_curves()
        nu, c2 = p.nu, consts.c2
        # independent root of f2(z) = (2c2 z/ν)² on (0, z1)
        z2 = _bisect(lambda z: cf.f2(z) - (2 * c2 * z / nu) ** 2, 1e-6 * cf.z1, cf.z1 * (1 - 1e-9))
        ratio_err = max(ratio_err, abs(z2 / cf.z1 - 25 / 64))
        for got, want in (
            (eval_f(cf, cf.z1), cf.f2(cf.z1)),
            (cf.f1(cf.z1), cf.q1),
            (cf.f2(cf.z2), cf.f3(cf.z2)),
            (cf.f2(cf.z2), cf.q2),
            (float(cg.g1(cg.phi1)), float(cg.g2(cg.phi1))),
        ):
            cont = max(cont, abs(got - want) / abs(want))
        eta_err = max(eta_err, abs(cg.eta1 - cg.gamma * cg.phi1) / cg.eta1)
        # one-step solve of the line intersection g1(φ) = γφ
        phi1 = (cg.eta0 + cg.gamma0 * cg.theta_max) / (cg.gamma + cg.gamma0)
        phi1_err = max(phi1_err, abs(phi1 - cg.phi1) / cg.phi1)
        cap = (
            1.5 * cf.z0 ** (4 / 3)
            + 4 * nu ** (2 / 3) * c2 ** (-4 / 3) * cf.z0 ** (1 / 3) * cf.theta_bound_used ** (1 / 3)
        ) ** 0.75
        cap_excess = max(cap_excess, cf.z1 / cap - 1)
        k2_excess = max(k2_excess, b.theta_K2 / (2 * b.theta_max_scaling) - 1)
    return [
        _le("z2/z1 = 25/64 by independent bisection", ratio_err, 1e-10),
        _le("curve continuity at z1, z2, phi1", cont, 1e-9),
        _le("eta1 = gamma*phi1", eta_err, 1e-12),
        _le("phi1 from line-intersection oracle", phi1_err, 1e-12),
        _le("z1 within closed-form cap", cap_excess, 0.0, "z1/cap - 1"),
        _le("theta_K2 <= 2 theta_max_scaling", k2_excess, 0.0, "ratio - 1"),
    ]


def fast() -> list[Check]:
    return spectral_checks() + interpolant_checks() + bounds_checks()


# criterion 3: solver correctness ---------------------------------------------------


def convergence_order(ra=1e4, n=64, base_dt=0.04, t_end=1.0, amplitude=0.1, seed=3) -> float:
    p = params_from_ra_pr(ra, 1.0, 2.0)
    g = sp.make_grid(2.0, n, n)

    def final(dt):
        cfg = SimConfig(p, g, dt=dt, t_end=t_end, diag_stride=10**9, ic=ICSpec(amplitude=amplitude, seed=seed))
        return run(cfg)[0]

    ref = final(base_dt / 16)
    errs = []
    for dt in (base_dt, base_dt / 2, base_dt / 4):
        s = final(dt)
        errs.append(math.sqrt(sum(np.sum(np.abs(a - b) ** 2) for a, b in zip(s.arrays, ref.arrays))))
    return float(min(np.log2(errs[0] / errs[1]), np.log2(errs[1] / errs[2])))


def equilibrium_drift(alpha=0.7, steps=1000, dt=0.01, ra=1e4, n=32) -> float:
    p = params_from_ra_pr(ra, 1.0, 2.0)
    g = sp.make_grid(2.0, n, n)
    s0 = initial_state(SimConfig(p, g, ic=ICSpec(kind="zero", alpha=alpha)))
    s = s0
    for _ in range(steps):
        s = step(s, dt, p)
    return max(float(np.max(np.abs(a - b))) for a, b in zip(s.arrays, s0.arrays))


def mean_drift(alpha=0.3, ra=1e4, n=64, t_end=30.0) -> float:
    p = params_from_ra_pr(ra, 1.0, 2.0)
    g = sp.make_grid(2.0, n, n)
    cfg = SimConfig(p, g, t_end=t_end, diag_stride=5, ic=ICSpec(amplitude=0.1, alpha=alpha))
    _, recs = run(cfg)
    return max(abs(r.alpha - alpha) for r in recs)


def subcritical_decay(ra=1e2, n=32, t_end=40.0) -> float:
    p = params_from_ra_pr(ra, 1.0, 2.0)
    g = sp.make_grid(2.0, n, n)
    cfg = SimConfig(p, g, t_end=t_end, diag_stride=50, ic=ICSpec(amplitude=1e-3))
    final, _ = run(cfg)
    return sp.seminorm_h1(final.theta)


def solver_checks() -> list[Check]:
    return [
        _ge("temporal self-convergence order", convergence_order(), 2.8),
        _le("equilibrium (alpha e1, 0) over 1000 steps", equilibrium_drift(), 1e-13),
        _le("horizontal mean conservation", mean_drift(), 1e-12),
        _le("subcritical decay of ||theta||", subcritical_decay(), 1e-10),
    ]


# criteria 4-7: desk-scale runs -----------------------------------------------------

DESK = dict(ra=1e5, pr=1.0, L=2.0, n=128, t_end=200.0, t_transient=40.0)


def containment(series, params, theta0: float, t_transient: float):
    """Region violations and maximum-principle failures of one run."""
    b = attractor_bounds(params)
    violations = region_check(series, *b.require_curves(), t_transient)
    mp_fail = [r.t for r in series if not max_principle_check(r, theta0, params)[0]]
    return violations, mp_fail


def sharpness_pair(series_by_ra: dict, L: float = 2.0):
    """Sharpness reports keyed by Ra; each value is ``(series, t_transient)``."""
    out = {}
    for ra, (series, t_tr) in sorted(series_by_ra.items()):
        ext = trajectory_extrema(series, t_tr)
        out[ra] = sharpness_ratios(ext, attractor_bounds(params_from_ra_pr(ra, 1.0, L)))
    return out


def nudging_sweep(ref: State, params, strides=(8, 16, 32, 64), duration=80.0, mu=1.0, diag_stride=20):
    """Twin runs from one reference state; returns {m: (fit, min_ratio, final_ratio, h)}."""
    g = ref.grid
    results = {}
    for m in strides:
        sim = SimConfig(params, g, t_end=duration, diag_stride=diag_stride)
        cfg = NudgeConfig(sim, mu=mu, interp=make_interpolant(g, m), t_assim_start=0.0)
        res = twin_run(cfg, ref_state=ref)
        e = np.array([r.total for r in res.records])
        results[m] = (decay_fit(res.records), float(e[1:].min() / e[0]), float(e[-1] / e[0]), cfg.interp.h)
    return results


def full(workdir: Path, log: Callable[[str], None] = print) -> list[Check]:
    """Everything in ``fast`` plus the desk-scale runs, driven through the CLI."""
    from .cli import main
    from .io import load_checkpoint, read_series
    from .rbsolver import DiagnosticsRecord

    checks = fast() + solver_checks()
    workdir = Path(workdir)
    a, b = workdir / "desk_a", workdir / "desk_b"
    d = DESK
    args = ["--ra", str(d["ra"]), "--pr", str(d["pr"]), "--length", str(d["L"]),
            "--set", f"grid.n1={d['n']}", "--set", f"grid.n2={d['n']}",
            "--set", f"stepper.t_end={d['t_end']}", "--set", "stepper.diag_stride=20"]
    t0 = time.time()
    code = main(["simulate", *args, "--out", str(a)])
    log(f"desk run finished in {time.time() - t0:.0f}s with exit code {code}")
    series = read_series(a / "diagnostics.csv", DiagnosticsRecord)
    ref, params, _ = load_checkpoint(a / "final.ckpt")
    theta0 = theta0_deficit(initial_state(_desk_sim()).theta)
    violations, mp_fail = containment(series, params, theta0, d["t_transient"])
    checks += [
        _le("region violations (Ra=1e5)", len(violations), 0),
        _le("maximum-principle failures (Ra=1e5)", len(mp_fail), 0),
    ]

    low = SimConfig(params_from_ra_pr(1e4, 1.0, 2.0), sp.make_grid(2.0, 64, 64), t_end=100.0, diag_stride=10)
    _, low_series = run(low)
    rep = sharpness_pair({1e4: (low_series, 20.0), 1e5: (series, d["t_transient"])})
    worst = min(min(r.ratio_z, r.ratio_phi, r.ratio_q, r.ratio_eta) for r in rep.values())
    checks += [
        _ge("all sharpness ratios > 1", worst, 1.0, "min ratio"),
        _ge("ratio_z grows with Ra", rep[1e5].ratio_z - rep[1e4].ratio_z, 0.0, "difference"),
    ]

    nud = nudging_sweep(ref, params)
    fit8 = nud[8][0]
    checks += [
        _le("fine-data decay rate", fit8.rate, 0.0),
        _ge("fine-data fit R^2", fit8.r_squared, 0.9),
        _ge("fine-data orders of decay", fit8.orders_of_decay, 4.0),
        _ge("coarse-data min error ratio", nud[64][1], 0.1),
        _ge(
            "monotone decay across m=8,16,32",
            float(nud[8][2] < nud[16][2] < nud[32][2]),
            1.0,
            "final/initial " + ", ".join(f"m={m}: {nud[m][2]:.2e}" for m in (8, 16, 32)),
        ),
    ]

    code_b = main(["simulate", "--manifest", str(a / "manifest.json"), "--out", str(b)])
    same = (a / "diagnostics.csv").read_bytes() == (b / "diagnostics.csv").read_bytes()
    checks.append(_ge("manifest replay is byte-identical", float(same and code_b == 0), 1.0))
    return checks


def _desk_sim() -> SimConfig:
    d = DESK
    return SimConfig(
        params_from_ra_pr(d["ra"], d["pr"], d["L"]),
        sp.make_grid(d["L"], d["n"], d["n"]),
        t_end=d["t_end"],
    )


def run_battery(level: str, workdir: Optional[Path] = None, log: Callable[[str], None] = print) -> bool:
    if level == "fast":
        checks = fast()
    elif level == "full":
        if workdir is None:
            raise ValueError("full verification needs a work directory")
        checks = full(workdir, log)
    else:
        raise ValueError(f"unknown verify level {level!r}")
    for c in checks:
        log(c.line())
    ok = all(c.passed for c in checks)
    log(f"{sum(c.passed for c in checks)}/{len(checks)} checks passed")
    return ok
