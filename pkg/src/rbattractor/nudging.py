"""
Continuous data assimilation of the horizontal velocity.

The auxiliary system evolves like the reference one, plus a feedback term
-μ P(I_h(ũ₁ - u₁) e₁) in the momentum equation. The observation operator I_h
sees the collocation grid at stride m.

Reference and auxiliary states advance together through one integrating-factor
RK3 stepper over six coefficient arrays. The innovation is recomputed at
every stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

from .params import PhysParams
from .rbsolver import (
    IFRK3,
    SimConfig,
    State,
    _check_finite,
    _rates,
    _tendency,
    cfl_dt,
    initial_state,
    run,
)
from .spectral import EVEN, ODD, GridSpec, SpectralScalar, VectorField, norm_l2, seminorm_h1

__all__ = [
    "DecayFit",
    "ErrorRecord",
    "InterpolantSpec",
    "NudgeConfig",
    "TwinResult",
    "apply_interpolant",
    "decay_fit",
    "error_record",
    "interpolant_physical",
    "make_interpolant",
    "nudged_rhs",
    "twin_run",
]

MODES = ("block-average", "nodal-sampling")


@dataclass(frozen=True)
class InterpolantSpec:
    """Observation operator at stride ``stride`` on a given collocation grid.

    ``h`` is the realized coarse spacing max(mL/n1, 2m/n2).
    """

    mode: str
    stride: int
    n1: int
    n2: int
    h: float

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"interpolant mode must be one of {MODES}, got {self.mode!r}")
        m = self.stride
        if not (isinstance(m, (int, np.integer)) and m >= 1):
            raise ValueError(f"stride must be a positive integer, got {m!r}")
        if self.n1 % m or self.n2 % m:
            raise ValueError(f"stride {m} must divide n1={self.n1} and n2={self.n2}")


def make_interpolant(grid: GridSpec, stride: int, mode: str = "block-average") -> InterpolantSpec:
    h = max(stride * grid.L / grid.n1, 2.0 * stride / grid.n2)
    return InterpolantSpec(mode, int(stride), grid.n1, grid.n2, h)


def _check_grid(spec: InterpolantSpec, grid: GridSpec):
    if (spec.n1, spec.n2) != grid.shape:
        raise ValueError(
            f"interpolant built for {spec.n1}x{spec.n2}, field grid is {grid.n1}x{grid.n2}"
        )


def interpolant_physical(values: np.ndarray, spec: InterpolantSpec) -> np.ndarray:
    """Piecewise-constant cell values on the collocation grid (before projection)."""
    m = spec.stride
    n1, n2 = values.shape
    if (n1, n2) != (spec.n1, spec.n2):
        raise ValueError(f"array shape {values.shape} does not match interpolant grid")
    if m == 1:
        return values.copy()
    if spec.mode == "block-average":
        cells = values.reshape(n1 // m, m, n2 // m, m).mean(axis=(1, 3))
    else:
        cells = values[::m, ::m]
    return np.repeat(np.repeat(cells, m, axis=0), m, axis=1)


def _interp_coeffs(values: np.ndarray, spec: InterpolantSpec, grid: GridSpec, sign: int):
    return grid.forward(interpolant_physical(values, spec), sign) * grid.dealias_mask


def apply_interpolant(f: SpectralScalar, spec: InterpolantSpec) -> SpectralScalar:
    """I_h f: cell values, back to spectral space, parity-projected and dealiased."""
    _check_grid(spec, f.grid)
    coeffs = _interp_coeffs(f.physical(), spec, f.grid, f.parity.sign)
    return SpectralScalar(f.grid, f.parity, coeffs)


def _feedback(ref_u1: np.ndarray, mu: float, spec: InterpolantSpec, grid: GridSpec) -> Callable:
    def forcing(aux_u1: np.ndarray) -> np.ndarray:
        return -mu * _interp_coeffs(aux_u1 - ref_u1, spec, grid, 1)

    return forcing


def nudged_rhs(
    ref_state: State, aux_state: State, mu: float, spec: InterpolantSpec, params: PhysParams
) -> tuple[VectorField, SpectralScalar]:
    """Advection, buoyancy and feedback tendencies of the auxiliary system."""
    grid = aux_state.grid
    if ref_state.grid != grid:
        raise ValueError("reference and auxiliary states live on different grids")
    _check_grid(spec, grid)
    ref_u1 = grid.inverse(ref_state.u.u1.coeffs)
    (d1, d2, dth), _ = _tendency(aux_state.arrays, grid, _feedback(ref_u1, mu, spec, grid))
    du = VectorField(SpectralScalar(grid, EVEN, d1), SpectralScalar(grid, ODD, d2))
    return du, SpectralScalar(grid, ODD, dth)


# twin experiment -----------------------------------------------------------------


@dataclass(frozen=True)
class ErrorRecord:
    t: float
    err_u_h1: float
    err_theta_l2: float
    err_theta_h1: float

    @property
    def total(self) -> float:
        return self.err_u_h1 + self.err_theta_l2


def error_record(ref: State, aux: State) -> ErrorRecord:
    du = ref.u - aux.u
    dth = ref.theta - aux.theta
    return ErrorRecord(
        t=ref.t,
        err_u_h1=seminorm_h1(du),
        err_theta_l2=norm_l2(dth),
        err_theta_h1=seminorm_h1(dth),
    )


@dataclass(frozen=True)
class NudgeConfig:
    """Twin experiment set-up.

    The reference run is ``sim``, spun up to ``t_assim_start``. Assimilation
    then runs until ``sim.t_end``. ``aux_ic`` is "zero", or "reference" for
    the synchronized-start check.
    """

    sim: SimConfig
    mu: float = 1.0
    interp: Optional[InterpolantSpec] = None
    t_assim_start: float = 0.0
    aux_ic: str = "zero"

    def __post_init__(self):
        if not (math.isfinite(self.mu) and self.mu >= 0):
            raise ValueError(f"mu must be >= 0, got {self.mu!r}")
        if not (self.t_assim_start >= 0 and self.t_assim_start < self.sim.t_end):
            raise ValueError("t_assim_start must lie in [0, sim.t_end)")
        if self.aux_ic not in ("zero", "reference"):
            raise ValueError(f"aux_ic must be 'zero' or 'reference', got {self.aux_ic!r}")
        if self.interp is None:
            object.__setattr__(self, "interp", make_interpolant(self.sim.grid, 8))
        _check_grid(self.interp, self.sim.grid)


@dataclass
class TwinResult:
    records: list[ErrorRecord]
    reference: State
    auxiliary: State
    alpha_aux: list[float] = field(default_factory=list)


def twin_run(
    cfg: NudgeConfig,
    ref_state: Optional[State] = None,
    sink: Optional[Callable[[ErrorRecord], None]] = None,
) -> TwinResult:
    """Run the twin experiment.

    ``ref_state`` skips the spin-up and is used as the reference at assimilation
    start. The run then lasts ``sim.t_end - t_assim_start``.
    """
    sim = cfg.sim
    params, grid = sim.params, sim.grid
    if ref_state is None:
        ref_state = initial_state(sim)
        if cfg.t_assim_start > ref_state.t:
            spin = _replace_t_end(sim, cfg.t_assim_start)
            ref_state, _ = run(spin, state=ref_state)
    elif ref_state.grid != grid:
        raise ValueError("ref_state grid does not match the configuration")
    duration = sim.t_end - cfg.t_assim_start
    t0 = ref_state.t
    t_stop = t0 + duration

    if cfg.aux_ic == "zero":
        aux_state = State.from_arrays(t0, grid, [np.zeros(grid.shape, complex)] * 3)
    else:
        aux_state = State.from_arrays(t0, grid, [a.copy() for a in ref_state.arrays])

    mu, spec = cfg.mu, cfg.interp

    def coupled(y):
        ref_d, ref_u = _tendency(y[:3], grid)
        aux_d, aux_u = _tendency(y[3:], grid, _feedback(ref_u[0], mu, spec, grid))
        return (*ref_d, *aux_d), (ref_u, aux_u)

    rates = _rates(params, grid)
    stepper = IFRK3(rates + rates, coupled)
    y = list(ref_state.arrays) + list(aux_state.arrays)
    auto = sim.dt == "auto"

    def shared_dt(ref_u, aux_u):
        return min(
            cfl_dt(*ref_u, grid, sim.cfl_safety, sim.dt_max),
            cfl_dt(*aux_u, grid, sim.cfl_safety, sim.dt_max),
        )

    if auto:
        dt = shared_dt(
            (grid.inverse(y[0]), grid.inverse(y[1])), (grid.inverse(y[3]), grid.inverse(y[4]))
        )
    else:
        dt = float(sim.dt)

    result = TwinResult([], ref_state, aux_state)

    def emit(t, arrays):
        ref = State.from_arrays(t, grid, arrays[:3])
        aux = State.from_arrays(t, grid, arrays[3:])
        rec = error_record(ref, aux)
        result.records.append(rec)
        result.alpha_aux.append(aux.alpha)
        if sink is not None:
            sink(rec)

    emit(t0, y)
    t, n = t0, 0
    tol = 1e-12 * max(abs(t_stop), 1.0)
    while t < t_stop - tol:
        h = min(dt, t_stop - t)
        with np.errstate(over="ignore", invalid="ignore"):
            y, (ref_u, aux_u) = stepper.step(y, h)
        n += 1
        t = t0 + n * h if not auto and h == dt else t + h
        _check_finite(y[:3], t, "reference")
        _check_finite(y[3:], t, "auxiliary")
        if auto and n % sim.cfl_interval == 0:
            dt = shared_dt(ref_u, aux_u)
        if n % sim.diag_stride == 0 or t >= t_stop - tol:
            emit(t, y)
    result.reference = State.from_arrays(t, grid, y[:3])
    result.auxiliary = State.from_arrays(t, grid, y[3:])
    return result


def _replace_t_end(sim: SimConfig, t_end: float) -> SimConfig:
    from dataclasses import replace

    return replace(sim, t_end=t_end, checkpoint_stride=0)


# decay fitting -------------------------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    rate: float
    r_squared: float
    floor_reached: bool
    n_samples: int
    orders_of_decay: float


def decay_fit(
    series: Sequence[ErrorRecord],
    window: Optional[tuple[float, float]] = None,
    floor: float = 0.0,
) -> DecayFit:
    """Least-squares slope of log(err_u_h1 + err_theta_l2) against t.

    Samples at or below ``floor`` end the fit window. In that case
    ``floor_reached`` is set and the rate comes from the samples before it,
    or is NaN when fewer than 10 remain.
    """
    lo, hi = window if window is not None else (-math.inf, math.inf)
    pts = [(r.t, r.total) for r in series if lo <= r.t <= hi]
    if len(pts) < 10:
        raise ValueError(f"decay_fit needs >= 10 samples in the window, got {len(pts)}")
    t = np.array([p[0] for p in pts])
    err = np.array([p[1] for p in pts])
    positive = err[err > 0]
    orders = math.log10(positive[0] / positive.min()) if positive.size else 0.0
    below = np.flatnonzero(err <= floor)
    floor_reached = below.size > 0
    if floor_reached:
        t, err = t[: below[0]], err[: below[0]]
    if t.size < 10:
        return DecayFit(math.nan, math.nan, True, int(t.size), orders)
    fit = stats.linregress(t, np.log(err))
    return DecayFit(float(fit.slope), float(fit.rvalue**2), floor_reached, int(t.size), orders)
