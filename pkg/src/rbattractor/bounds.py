"""
Rigorous bounds on the global attractor of stress-free convection.

The scalar bounds are closed-form in ν, κ, L and the horizontal mean α. The
two bounding curves are piecewise solutions of final-value problems:

* ``CurveF`` bounds palinstrophy q = |A₀u|² by a function of the enstrophy
  z = ‖u‖², three branches glued at z₁ and z₂ = 25/64·z₁.
* ``CurveG`` bounds η = |A₁θ|² by a function of φ = ‖θ‖², a straight line
  from (ϑ, η₀) to its crossing (φ₁, η₁) with η = γφ and a power-law branch
  below φ₁, floored by the line g₃.

The inequalities behind them carry unnamed constants; these are collected in
``BoundConstants`` and every report records the values used.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .params import PhysParams, lambda1

__all__ = [
    "AttractorBounds",
    "BoundConstants",
    "CurveF",
    "CurveG",
    "DegenerateCurveError",
    "Thresholds",
    "attractor_bounds",
    "bounds_from_dict",
    "build_curve_f",
    "build_curve_g",
    "eval_f",
    "eval_g",
    "lambda1",
    "nudging_thresholds",
    "sample_curves",
    "thresholds",
]

THETA_FORMS = ("scaling", "rigorous-K2")


class DegenerateCurveError(ValueError):
    """The first palinstrophy branch never meets the parabola q = (c₂z/2ν)² below z₀."""

    def __init__(self, q0: float, parabola_at_z0: float):
        super().__init__(
            f"degenerate curve regime: q0={q0:.6g} >= (c2*z0/(2*nu))^2={parabola_at_z0:.6g}; "
            "constants or parameters lie outside the asymptotic regime"
        )
        self.q0 = q0
        self.parabola_at_z0 = parabola_at_z0


def _finite(name: str, value: float) -> float:
    if not math.isfinite(value):
        raise OverflowError(f"non-finite intermediate quantity {name}={value!r}")
    return value


def _evaluate(name: str, fn) -> float:
    """``fn()`` with float overflow and underflow-to-zero reported against ``name``."""
    try:
        value = fn()
    except (OverflowError, ZeroDivisionError) as exc:
        raise OverflowError(f"floating-point range exceeded while computing {name}") from exc
    return _finite(name, value)


@dataclass(frozen=True)
class BoundConstants:
    """Constants of the functional inequalities.

    c1: Ladyzhenskaya chain in the temperature-gradient estimate.
    c2: Agmon constant of the palinstrophy estimate.
    c_agmon: constant of the |A₁θ| trilinear estimate.
    c3: defaults to 2·c1², the factor picked up when that estimate is doubled.
    c4: always 2·max(c_agmon, c3).
    """

    c1: float = 1.0
    c2: float = 1.0
    c_agmon: float = 1.0
    c3: float | None = None
    c4: float = field(init=False)

    def __post_init__(self):
        if self.c3 is None:
            object.__setattr__(self, "c3", 2.0 * self.c1**2)
        for name in ("c1", "c2", "c_agmon", "c3"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"constant {name} must be positive, got {v!r}")
        object.__setattr__(self, "c4", 2.0 * max(self.c_agmon, self.c3))

    def as_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------------
# enstrophy-palinstrophy plane


@dataclass(frozen=True)
class CurveF:
    nu: float
    c2: float
    theta_bound_used: float
    z0: float
    q0: float
    z1: float
    q1: float
    z2: float
    q2: float

    def f1(self, z):
        a = (self.c2 / (2 * self.nu)) ** (4 / 3)
        return (1.5 * a * (self.z0 ** (4 / 3) - np.power(z, 4 / 3)) + self.q0 ** (2 / 3)) ** 1.5

    def f2(self, z):
        c, nu = self.c2, self.nu
        inner = -2 * c * z + (nu * math.sqrt(self.q1) + 2 * c * self.z1) * np.sqrt(z / self.z1)
        return inner**2 / nu**2

    def f3(self, z):
        # slope 2c₂ solves dq/dz = q/(3z) - (2c₂/3ν)q^½; it gives f3'(z₂) = 0
        c, nu = self.c2, self.nu
        inner = -2 * c * z + (5 * nu * math.sqrt(self.q2) + 2 * c * self.z2) * np.power(
            z / self.z2, 1 / 6
        )
        return inner**2 / (25 * nu**2)

    def region_boundary(self, z):
        """Lower edge of the region where enstrophy is strictly dissipated."""
        return 2.0 / self.nu * np.sqrt(z * self.theta_bound_used)

    def __call__(self, z):
        return eval_f(self, z)


def build_curve_f(params: PhysParams, consts: BoundConstants, theta_bound: float) -> CurveF:
    if not theta_bound > 0:
        raise ValueError(f"theta_bound must be positive, got {theta_bound!r}")
    nu, c2 = params.nu, consts.c2
    z0 = params.omega_vol / (nu**2 * params.lambda1)
    q0 = 2.0 / nu * math.sqrt(z0 * theta_bound)
    _finite("q0", q0)

    def par1(z):
        return (c2 * z / (2 * nu)) ** 2

    if q0 >= par1(z0):
        raise DegenerateCurveError(q0, par1(z0))

    # q1 sits where f1 meets (c2 z/2ν)²
    a = (c2 / (2 * nu)) ** (4 / 3)

    def F(z):
        return (1.5 * a * (z0 ** (4 / 3) - z ** (4 / 3)) + q0 ** (2 / 3)) ** 1.5 - par1(z)

    lo, hi = 1e-12 * z0, z0
    if not F(lo) > 0:
        raise RuntimeError("z1 bisection bracket has no sign change")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if F(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * hi:
            break
    else:
        raise RuntimeError("z1 bisection did not converge in 200 iterations")
    z1 = 0.5 * (lo + hi)
    q1 = par1(z1)

    z1_cap = (
        1.5 * z0 ** (4 / 3) + 4 * nu ** (2 / 3) * c2 ** (-4 / 3) * z0 ** (1 / 3) * theta_bound ** (1 / 3)
    ) ** 0.75
    if z1 > z1_cap * (1 + 1e-12):
        raise RuntimeError(f"z1={z1!r} exceeds its closed-form cap {z1_cap!r}")

    z2 = 25.0 / 64.0 * z1
    q2 = (2 * c2 * z2 / nu) ** 2
    curve = CurveF(nu, c2, theta_bound, z0, q0, z1, q1, z2, q2)

    for label, got, want in (
        ("f1(z1)", curve.f1(z1), q1),
        ("f2(z1)", curve.f2(z1), q1),
        ("f2(z2)", curve.f2(z2), q2),
        ("f3(z2)", curve.f3(z2), q2),
        ("f1(z0)", curve.f1(z0), q0),
    ):
        if abs(got - want) > 1e-9 * want:
            raise RuntimeError(f"curve continuity failed at {label}: {got!r} vs {want!r}")
    return curve


def eval_f(curve: CurveF, z):
    """Piecewise palinstrophy bound f(z) for 0 ≤ z ≤ z₀ (scalar or array)."""
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr < 0) or np.any(z_arr > curve.z0 * (1 + 1e-12)):
        raise ValueError(f"z must lie in [0, z0={curve.z0!r}]")
    z_arr = np.minimum(z_arr, curve.z0)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(
            z_arr >= curve.z1,
            curve.f1(z_arr),
            np.where(z_arr >= curve.z2, curve.f2(z_arr), curve.f3(z_arr)),
        )
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# ‖θ‖²-|A₁θ|² plane


@dataclass(frozen=True)
class CurveG:
    kappa: float
    lambda1: float
    c4: float
    z_max: float
    theta_max: float
    q_max_used: float
    eta0: float
    gamma: float
    gamma0: float
    gamma_tilde: float
    phi1: float
    eta1: float

    def g1(self, phi):
        return self.eta0 - self.gamma0 * (np.asarray(phi) - self.theta_max)

    def g2(self, phi):
        phi = np.asarray(phi, dtype=float)
        w = (phi / self.phi1) * self.eta1**0.75 + self.gamma_tilde * (
            np.power(phi, 0.75) - phi * self.phi1**-0.25
        )
        return np.power(np.maximum(w, 0.0), 4 / 3)

    def g3(self, phi):
        return self.z_max / self.kappa**2 * (self.c4 * np.asarray(phi) + 4 / self.lambda1)

    def __call__(self, phi):
        return eval_g(self, phi)


def build_curve_g(
    params: PhysParams, consts: BoundConstants, theta_max: float, q_max_used: float
) -> CurveG:
    if not (theta_max > 0 and q_max_used > 0):
        raise ValueError("theta_max and q_max_used must be positive")
    kappa, lam, c4 = params.kappa, params.lambda1, consts.c4
    z = params.omega_vol / (params.nu**2 * lam)
    eta0 = _finite("eta0", z / kappa**2 * (c4 * theta_max + 4 / lam))
    gamma = _finite(
        "gamma", (2 * c4 / (kappa * lam**0.25)) ** (4 / 3) * q_max_used ** (2 / 3)
    )
    gamma0 = 4 ** (-1 / 3) * gamma
    gamma_tilde = _finite("gamma_tilde", 8 * c4 / (lam**0.25 * kappa) * math.sqrt(q_max_used))
    phi1 = _finite(
        "phi1",
        ((c4 * z / kappa**2 + gamma0) * theta_max + 4 * z / (kappa**2 * lam)) / (gamma + gamma0),
    )
    eta1 = _finite("eta1", gamma * phi1)
    curve = CurveG(
        kappa, lam, c4, z, theta_max, q_max_used, eta0, gamma, gamma0, gamma_tilde, phi1, eta1
    )
    for label, got in (("g1(phi1)", float(curve.g1(phi1))), ("g2(phi1)", float(curve.g2(phi1)))):
        if abs(got - eta1) > 1e-10 * eta1:
            raise RuntimeError(f"curve continuity failed at {label}: {got!r} vs {eta1!r}")
    return curve


def eval_g(curve: CurveG, phi):
    """Bound on η for φ clamped to [0, ϑ]: g₂ left of φ₁, g₁ right of it, never below g₃."""
    phi = np.clip(np.asarray(phi, dtype=float), 0.0, curve.theta_max)
    branch = np.where(phi >= curve.phi1, curve.g1(phi), curve.g2(phi))
    out = np.maximum(branch, curve.g3(phi))
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# scalar bounds


@dataclass(frozen=True)
class AttractorBounds:
    lambda1: float
    u_l2_sq_max: float
    z_max: float
    theta_K2: float
    theta_max_scaling: float
    q_max_scaling: float
    q2_exact: float
    eta_max_scaling: float
    eta1_exact: float
    theta_form: str
    theta_used: float
    alpha: float
    constants: BoundConstants
    curve_f: Optional[CurveF] = field(repr=False)
    curve_g: Optional[CurveG] = field(repr=False)
    # (q0, parabola at z0) when curve F does not exist; the exact q and η are NaN then
    degenerate: Optional[tuple[float, float]] = None

    SCALARS = (
        "lambda1",
        "u_l2_sq_max",
        "z_max",
        "theta_K2",
        "theta_max_scaling",
        "q_max_scaling",
        "q2_exact",
        "eta_max_scaling",
        "eta1_exact",
        "theta_used",
    )

    def require_curves(self) -> tuple[CurveF, CurveG]:
        if self.degenerate is not None:
            raise DegenerateCurveError(*self.degenerate)
        return self.curve_f, self.curve_g

    def as_dict(self) -> dict:
        values = {k: getattr(self, k) for k in self.SCALARS}
        return {
            **{k: v if math.isfinite(v) else None for k, v in values.items()},
            "log10": {k: math.log10(v) if math.isfinite(v) else None for k, v in values.items()},
            "theta_form": self.theta_form,
            "alpha": self.alpha,
            "constants": self.constants.as_dict(),
            "curve_f": None if self.curve_f is None else asdict(self.curve_f),
            "curve_g": None if self.curve_g is None else asdict(self.curve_g),
            "degenerate": None if self.degenerate is None else list(self.degenerate),
        }


def attractor_bounds(
    params: PhysParams,
    consts: BoundConstants | None = None,
    alpha: float = 0.0,
    theta_form: str = "scaling",
) -> AttractorBounds:
    if theta_form not in THETA_FORMS:
        raise ValueError(f"theta_form must be one of {THETA_FORMS}, got {theta_form!r}")
    consts = consts or BoundConstants()
    nu, kappa, lam, vol = params.nu, params.kappa, params.lambda1, params.omega_vol
    ra_pr = params.Ra * params.Pr

    u_l2 = _evaluate("u_l2_sq_max", lambda: vol / (nu**2 * lam**2) + alpha**2 * vol)
    z = _evaluate("z_max", lambda: vol / (nu**2 * lam))
    theta_k2 = _evaluate(
        "theta_K2",
        lambda: 2 * math.sqrt(consts.c1**4 / kappa**4 * vol**2 * z**2 + vol * z / (kappa**2 * lam)),
    )
    theta_s = _evaluate("theta_max_scaling", lambda: vol * z * ra_pr + math.sqrt(vol / lam * z * ra_pr))
    q_s = _evaluate("q_max_scaling", lambda: z**2 / nu**2 + math.sqrt(z) / nu * math.sqrt(theta_s))
    eta_s = _evaluate(
        "eta_max_scaling",
        lambda: z * theta_s / kappa**2
        + q_s ** (2 / 3) * theta_s / (kappa ** (4 / 3) * lam ** (1 / 3))
        + z / (kappa**2 * lam),
    )

    theta_used = theta_s if theta_form == "scaling" else theta_k2
    try:
        cf = build_curve_f(params, consts, theta_used)
    except DegenerateCurveError as exc:
        cf, cg, degenerate = None, None, (exc.q0, exc.parabola_at_z0)
    else:
        cg, degenerate = build_curve_g(params, consts, theta_used, cf.q2), None
    return AttractorBounds(
        lambda1=lam,
        u_l2_sq_max=u_l2,
        z_max=z,
        theta_K2=theta_k2,
        theta_max_scaling=theta_s,
        q_max_scaling=q_s,
        q2_exact=math.nan if cf is None else cf.q2,
        eta_max_scaling=eta_s,
        eta1_exact=math.nan if cg is None else cg.eta1,
        theta_form=theta_form,
        theta_used=theta_used,
        alpha=alpha,
        constants=consts,
        curve_f=cf,
        curve_g=cg,
        degenerate=degenerate,
    )


# --------------------------------------------------------------------------
# nudging thresholds


class Thresholds(NamedTuple):
    K1: float
    K2: float
    h_star: float


def thresholds(nu: float, kappa: float, lam: float, q: float, phi: float, eta: float) -> Thresholds:
    """Order-of-magnitude nudging thresholds with the hidden constants set to 1."""
    K1 = 1 / (kappa * lam) + 1 / (nu * kappa**2) + 1 / kappa + q / nu
    K2 = K1 + phi * eta / kappa
    return Thresholds(K1, K2, math.sqrt(nu / K1))


def nudging_thresholds(params: PhysParams, bounds: AttractorBounds) -> Thresholds:
    """Thresholds at the curve-derived bounds; NaN when curve F is degenerate."""
    return thresholds(
        params.nu,
        params.kappa,
        params.lambda1,
        bounds.q2_exact,
        bounds.theta_used,
        bounds.eta1_exact,
    )


def sample_curves(curve_f: CurveF, curve_g: CurveG, n_samples: int = 200, decades: float = 6.0):
    """Log-spaced samples ``(z, f(z), phi, g(phi))`` ending at z₀ and ϑ."""
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    z = np.logspace(math.log10(curve_f.z0) - decades, math.log10(curve_f.z0), n_samples)
    z[-1] = curve_f.z0
    phi = np.logspace(
        math.log10(curve_g.theta_max) - decades, math.log10(curve_g.theta_max), n_samples
    )
    phi[-1] = curve_g.theta_max
    return z, eval_f(curve_f, z), phi, eval_g(curve_g, phi)


def bounds_from_dict(doc: dict) -> AttractorBounds:
    """Inverse of ``AttractorBounds.as_dict``."""
    consts_doc = {k: v for k, v in doc["constants"].items() if k != "c4"}
    return AttractorBounds(
        **{k: math.nan if doc[k] is None else doc[k] for k in AttractorBounds.SCALARS},
        theta_form=doc["theta_form"],
        alpha=doc["alpha"],
        constants=BoundConstants(**consts_doc),
        curve_f=CurveF(**doc["curve_f"]) if doc.get("curve_f") else None,
        curve_g=CurveG(**doc["curve_g"]) if doc.get("curve_g") else None,
        degenerate=tuple(doc["degenerate"]) if doc.get("degenerate") else None,
    )
