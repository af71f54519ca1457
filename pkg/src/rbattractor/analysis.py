"""Post-processing of diagnostics series against the attractor bounds."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

from .bounds import AttractorBounds, CurveF, CurveG, eval_f, eval_g

__all__ = [
    "SharpnessReport",
    "TrajectoryExtrema",
    "Violation",
    "inflation_between",
    "inflation_exponent",
    "region_check",
    "sharpness_ratios",
    "trajectory_extrema",
]

MIN_SAMPLES = 100
REL_TOL = 1e-6


@dataclass(frozen=True)
class TrajectoryExtrema:
    t_transient: float
    n_samples: int
    max_z: float
    max_q: float
    max_phi: float
    max_eta: float
    max_u_l2_sq: float


def _post_transient(series: Sequence, t_transient: float) -> list:
    return [r for r in series if r.t >= t_transient]


def trajectory_extrema(
    series: Sequence, t_transient: float, min_samples: int = MIN_SAMPLES
) -> TrajectoryExtrema:
    kept = _post_transient(series, t_transient)
    if len(kept) < min_samples:
        raise ValueError(
            f"{len(kept)} samples after t={t_transient}, at least {min_samples} required"
        )

    def top(name):
        return float(max(getattr(r, name) for r in kept))

    return TrajectoryExtrema(
        t_transient=t_transient,
        n_samples=len(kept),
        max_z=top("z"),
        max_q=top("q"),
        max_phi=top("phi"),
        max_eta=top("eta"),
        max_u_l2_sq=top("u_l2_sq"),
    )


def inflation_exponent(ratio: float, span: float = 100.0) -> float:
    """β with span^β = ratio."""
    if not ratio > 0:
        raise ValueError(f"ratio must be positive, got {ratio!r}")
    return math.log(ratio) / math.log(span)


def inflation_between(low: "SharpnessReport", high: "SharpnessReport", ra_low: float, ra_high: float) -> dict:
    """Excess Ra-exponent of each bound between two runs.

    The quotient of sharpness ratios at ``ra_high`` and ``ra_low`` is read
    against the Ra span, so two runs two decades apart reduce to base 100.
    """
    span = ra_high / ra_low
    return {
        name: inflation_exponent(getattr(high, f"ratio_{name}") / getattr(low, f"ratio_{name}"), span)
        for name in ("z", "phi", "q", "eta")
    }


@dataclass(frozen=True)
class SharpnessReport:
    ratio_z: float
    ratio_phi: float
    ratio_q: float
    ratio_eta: float
    beta_z: float
    beta_phi: float
    beta_q: float
    beta_eta: float
    bounds_used: str

    @property
    def all_above_one(self) -> bool:
        return min(self.ratio_z, self.ratio_phi, self.ratio_q, self.ratio_eta) > 1.0

    def as_dict(self) -> dict:
        return {**asdict(self), "all_above_one": self.all_above_one}


def sharpness_ratios(
    extrema: TrajectoryExtrema, bounds: AttractorBounds, bounds_used: str = "exact"
) -> SharpnessReport:
    """Bound over observed maximum for each attractor norm.

    ``bounds_used="exact"`` takes the curve-derived q and η bounds.
    ``"scaling"`` takes the closed-form ones. ϑ is the value the curves were
    built with in both cases.
    """
    if bounds_used not in ("exact", "scaling"):
        raise ValueError(f"bounds_used must be 'exact' or 'scaling', got {bounds_used!r}")
    observed = (extrema.max_z, extrema.max_phi, extrema.max_q, extrema.max_eta)
    if min(observed) <= 0:
        raise ValueError("extrema must be positive")
    if bounds_used == "exact":
        q_b, eta_b = bounds.q2_exact, bounds.eta1_exact
    else:
        q_b, eta_b = bounds.q_max_scaling, bounds.eta_max_scaling
    rz = bounds.z_max / extrema.max_z
    rp = bounds.theta_used / extrema.max_phi
    rq = q_b / extrema.max_q
    re = eta_b / extrema.max_eta
    return SharpnessReport(
        rz,
        rp,
        rq,
        re,
        inflation_exponent(rz),
        inflation_exponent(rp),
        inflation_exponent(rq),
        inflation_exponent(re),
        bounds_used,
    )


@dataclass(frozen=True)
class Violation:
    index: int
    t: float
    quantity: str
    value: float
    bound: float


def region_check(
    series: Sequence,
    curve_f: CurveF,
    curve_g: CurveG,
    t_transient: float,
    rel_tol: float = REL_TOL,
) -> list[Violation]:
    """Post-transient samples outside z ≤ z₀, q ≤ f(z), φ ≤ ϑ, η ≤ g(φ)."""
    if not any(r.t >= t_transient for r in series):
        raise ValueError(f"no samples after t={t_transient}")
    out: list[Violation] = []
    for i, r in enumerate(series):
        if r.t < t_transient:
            continue
        if r.z > curve_f.z0 * (1 + rel_tol):
            out.append(Violation(i, r.t, "z", r.z, curve_f.z0))
        else:
            bound = eval_f(curve_f, min(r.z, curve_f.z0))
            if r.q > bound * (1 + rel_tol):
                out.append(Violation(i, r.t, "q", r.q, bound))
        if r.phi > curve_g.theta_max * (1 + rel_tol):
            out.append(Violation(i, r.t, "phi", r.phi, curve_g.theta_max))
        bound = eval_g(curve_g, r.phi)
        if r.eta > bound * (1 + rel_tol):
            out.append(Violation(i, r.t, "eta", r.eta, bound))
    return out
