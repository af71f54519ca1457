"""
Time integration of the stress-free Rayleigh-Bénard system on the extended domain.

    du/dt + ν A₀u + B₀(u, u) = P(θ e₂)
    dθ/dt + κ A₁θ + B₁(u, θ) = u·e₂

Diffusion is applied exactly through per-mode exponential factors; advection
and buoyancy coupling are advanced with the three-stage SSP Runge-Kutta
scheme written for the integrating-factor variables.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from .params import PhysParams, params_from_ra_pr
from .spectral import (
    EVEN,
    ODD,
    GridSpec,
    SpectralScalar,
    VectorField,
    leray_project_arrays,
    norm_A,
    norm_A32,
    norm_l2,
    seminorm_h1,
    to_physical,
    to_spectral,
)

__all__ = [
    "BlowUpError",
    "DiagnosticsRecord",
    "ICSpec",
    "PhysParams",
    "SimConfig",
    "State",
    "diagnostics",
    "initial_state",
    "max_principle_check",
    "params_from_ra_pr",
    "rhs",
    "run",
    "step",
    "theta0_deficit",
]

log = logging.getLogger(__name__)


class BlowUpError(RuntimeError):
    """Non-finite coefficients appeared during time stepping."""

    def __init__(self, t: float, system: str = "solution"):
        super().__init__(f"non-finite values in the {system} at t={t!r}")
        self.t = t
        self.system = system


@dataclass(frozen=True, eq=False)
class State:
    t: float
    u: VectorField
    theta: SpectralScalar

    def __post_init__(self):
        if self.theta.parity is not ODD:
            raise ValueError("temperature must be odd in x2")
        if self.theta.grid != self.u.grid:
            raise ValueError("velocity and temperature live on different grids")

    @property
    def grid(self) -> GridSpec:
        return self.u.grid

    @property
    def alpha(self) -> float:
        """Spatial mean of the horizontal velocity."""
        return float(self.u.u1.coeffs[0, 0].real)

    @property
    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.u.u1.coeffs, self.u.u2.coeffs, self.theta.coeffs)

    @classmethod
    def from_arrays(cls, t: float, grid: GridSpec, arrays: Sequence[np.ndarray]) -> "State":
        c1, c2, ct = arrays
        return cls(
            t,
            VectorField(SpectralScalar(grid, EVEN, c1), SpectralScalar(grid, ODD, c2)),
            SpectralScalar(grid, ODD, ct),
        )


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    u_l2_sq: float
    z: float
    q: float
    phi: float
    eta: float
    zeta: float
    xi: float
    theta_l2: float
    theta_max: float
    alpha: float

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_row(self) -> list[float]:
        return [getattr(self, name) for name in self.columns()]


def diagnostics(state: State) -> DiagnosticsRecord:
    u, th = state.u, state.theta
    return DiagnosticsRecord(
        t=state.t,
        u_l2_sq=norm_l2(u) ** 2,
        z=seminorm_h1(u) ** 2,
        q=norm_A(u) ** 2,
        phi=seminorm_h1(th) ** 2,
        eta=norm_A(th) ** 2,
        zeta=norm_A32(u) ** 2,
        xi=norm_A32(th) ** 2,
        theta_l2=norm_l2(th),
        theta_max=float(np.max(np.abs(to_physical(th)))),
        alpha=state.alpha,
    )


@dataclass(frozen=True)
class ICSpec:
    kind: str = "perturbed-conduction"
    amplitude: float = 1e-3
    seed: int = 0
    alpha: float = 0.0
    kmax: int = 8

    def __post_init__(self):
        if self.kind not in ("perturbed-conduction", "zero"):
            raise ValueError(f"unknown initial condition kind {self.kind!r}")
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")


@dataclass(frozen=True)
class SimConfig:
    params: PhysParams
    grid: GridSpec
    dt: Union[float, str] = "auto"
    t_end: float = 1.0
    diag_stride: int = 10
    checkpoint_stride: int = 0
    ic: ICSpec = field(default_factory=ICSpec)
    cfl_safety: float = 0.5
    dt_max: float = 0.05
    cfl_interval: int = 10

    def __post_init__(self):
        if self.dt != "auto" and not (isinstance(self.dt, (int, float)) and self.dt > 0):
            raise ValueError(f"dt must be positive or 'auto', got {self.dt!r}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be positive, got {self.t_end!r}")
        if self.diag_stride < 1:
            raise ValueError("diag_stride must be >= 1")
        if self.checkpoint_stride < 0:
            raise ValueError("checkpoint_stride must be >= 0")
        if abs(self.grid.L - self.params.L) > 1e-12 * self.params.L:
            raise ValueError(f"grid period {self.grid.L} differs from params.L {self.params.L}")


def initial_state(cfg: SimConfig) -> State:
    grid, ic = cfg.grid, cfg.ic
    c1 = np.zeros(grid.shape, dtype=complex)
    c1[0, 0] = ic.alpha
    c2 = np.zeros(grid.shape, dtype=complex)
    ct = np.zeros(grid.shape, dtype=complex)
    if ic.kind == "perturbed-conduction" and ic.amplitude > 0:
        rng = np.random.default_rng(ic.seed)
        band = (np.abs(grid.index1)[:, None] <= ic.kmax) & (
            np.abs(grid.index2)[None, :] <= ic.kmax
        )
        noise = rng.standard_normal(grid.shape)
        ct = grid.forward(noise, -1) * band * grid.dealias_mask
        peak = np.max(np.abs(grid.inverse(ct)))
        ct *= ic.amplitude / peak
    return State.from_arrays(0.0, grid, (c1, c2, ct))


# right-hand side -----------------------------------------------------------------


def _tendency(y, grid: GridSpec, forcing: Optional[Callable] = None):
    """Nonlinear + buoyancy tendencies on raw coefficient arrays.

    Returns the tendencies and the physical velocity, which callers reuse for
    CFL estimates and nudging innovations.
    """
    c1, c2, ct = y
    inv = grid.inverse
    u1 = inv(c1)
    u2 = inv(c2)
    u1x = inv(grid.ik1 * c1)
    u1y = inv(grid.ik2 * c1)
    u2x = inv(grid.ik1 * c2)
    # ∂₂u₂ = -∂₁u₁ for the projected velocity
    u2y = -u1x
    tx = inv(grid.ik1 * ct)
    ty = inv(grid.ik2 * ct)
    mask = grid.dealias_mask
    n1 = grid.forward(u1 * u1x + u2 * u1y, 1)
    n2 = grid.forward(u1 * u2x + u2 * u2y, -1)
    nt = grid.forward(u1 * tx + u2 * ty, -1)
    f1 = -n1 * mask
    f2 = (ct - n2) * mask
    if forcing is not None:
        f1 = f1 + forcing(u1)
    d1, d2 = leray_project_arrays(f1, f2, grid)
    dt_ = (c2 - nt) * mask
    return (d1, d2, dt_), (u1, u2)


def rhs(state: State, params: PhysParams) -> tuple[VectorField, SpectralScalar]:
    """Advection and buoyancy tendencies (diffusion excluded)."""
    grid = state.grid
    (d1, d2, dth), _ = _tendency(state.arrays, grid)
    du = VectorField(SpectralScalar(grid, EVEN, d1), SpectralScalar(grid, ODD, d2))
    return du, SpectralScalar(grid, ODD, dth)


# integrating-factor SSP-RK3 ------------------------------------------------------


class IFRK3:
    """Integrating-factor SSP-RK3 stepper over a tuple of coefficient arrays.

    ``rates[i]`` is the per-mode decay rate of ``y[i]`` (ν|k|² or κ|k|²) and
    ``tendency(y)`` returns ``(dy, extra)``.
    """

    def __init__(self, rates: Sequence[np.ndarray], tendency: Callable):
        self.rates = list(rates)
        self.tendency = tendency
        self._dt = None

    def _factors(self, dt: float):
        if dt != self._dt:
            self._E = [np.exp(-r * dt) for r in self.rates]
            self._Eh = [np.exp(-r * (0.5 * dt)) for r in self.rates]
            self._Ehinv = [np.exp(r * (0.5 * dt)) for r in self.rates]
            self._dt = dt
        return self._E, self._Eh, self._Ehinv

    def step(self, y, dt: float):
        E, Eh, Ehinv = self._factors(dt)
        n0, extra = self.tendency(y)
        y1 = [e * (a + dt * n) for e, a, n in zip(E, y, n0)]
        n1, _ = self.tendency(y1)
        y2 = [
            0.75 * eh * a + 0.25 * ehi * (b + dt * n)
            for eh, ehi, a, b, n in zip(Eh, Ehinv, y, y1, n1)
        ]
        n2, _ = self.tendency(y2)
        y3 = [
            (1.0 / 3.0) * e * a + (2.0 / 3.0) * eh * (b + dt * n)
            for e, eh, a, b, n in zip(E, Eh, y, y2, n2)
        ]
        return y3, extra


def _rates(params: PhysParams, grid: GridSpec):
    return (params.nu * grid.ksq, params.nu * grid.ksq, params.kappa * grid.ksq)


def step(
    state: State,
    dt: float,
    params: PhysParams,
    tendency: Optional[Callable] = None,
) -> State:
    """Advance one step.

    ``tendency`` replaces the nonlinear right-hand side on raw arrays; it
    exists so the pure-diffusion limit can be tested.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    grid = state.grid
    tend = tendency or (lambda y: _tendency(y, grid))
    y, _ = IFRK3(_rates(params, grid), tend).step(state.arrays, dt)
    t = state.t + dt
    _check_finite(y, t)
    return State.from_arrays(t, grid, y)


def _check_finite(y, t: float, system: str = "solution"):
    if not all(np.isfinite(a.sum()) for a in y):
        raise BlowUpError(t, system)


def cfl_dt(u1: np.ndarray, u2: np.ndarray, grid: GridSpec, safety: float, dt_max: float) -> float:
    a1 = float(np.max(np.abs(u1)))
    a2 = float(np.max(np.abs(u2)))
    limits = [dt_max]
    if a1 > 0:
        limits.append(safety * grid.dx1 / a1)
    if a2 > 0:
        limits.append(safety * grid.dx2 / a2)
    return min(limits)


# driver ----------------------------------------------------------------------------


def run(
    cfg: SimConfig,
    sink: Optional[Callable[[DiagnosticsRecord], None]] = None,
    checkpoint_dir: Optional[Union[str, Path]] = None,
    state: Optional[State] = None,
) -> tuple[State, list[DiagnosticsRecord]]:
    """Integrate from ``state`` (default: the configured initial condition) to ``cfg.t_end``.

    Diagnostics are recorded every ``diag_stride`` steps, including the first
    and last states.
    """
    from .io import save_checkpoint

    params, grid = cfg.params, cfg.grid
    if state is None:
        state = initial_state(cfg)
    records: list[DiagnosticsRecord] = []

    def emit(s: State):
        rec = diagnostics(s)
        records.append(rec)
        if sink is not None:
            sink(rec)

    def checkpoint(s: State, name: str):
        if checkpoint_dir is None:
            return
        path = Path(checkpoint_dir) / name
        try:
            save_checkpoint(path, s, params)
        except OSError as exc:
            raise OSError(f"failed to write checkpoint {path}: {exc}") from exc

    stepper = IFRK3(_rates(params, grid), lambda y: _tendency(y, grid))
    y = list(state.arrays)
    t0 = state.t
    t = t0
    n = 0
    auto = cfg.dt == "auto"
    if auto:
        dt = cfl_dt(grid.inverse(y[0]), grid.inverse(y[1]), grid, cfg.cfl_safety, cfg.dt_max)
    else:
        dt = float(cfg.dt)
    emit(state)
    last_good = state
    while t < cfg.t_end - 1e-12 * cfg.t_end:
        h = min(dt, cfg.t_end - t)
        with np.errstate(over="ignore", invalid="ignore"):
            y, (u1, u2) = stepper.step(y, h)
        n += 1
        t = t0 + n * h if not auto and h == dt else t + h
        try:
            _check_finite(y, t)
        except BlowUpError:
            checkpoint(last_good, "last_good.ckpt")
            raise
        if auto and n % cfg.cfl_interval == 0:
            dt = cfl_dt(u1, u2, grid, cfg.cfl_safety, cfg.dt_max)
        done = t >= cfg.t_end - 1e-12 * cfg.t_end
        need_diag = n % cfg.diag_stride == 0 or done
        need_ckpt = cfg.checkpoint_stride and n % cfg.checkpoint_stride == 0
        if need_diag or need_ckpt:
            s = State.from_arrays(t, grid, y)
            last_good = s
            if need_diag:
                emit(s)
            if need_ckpt:
                checkpoint(s, f"ckpt_{n:08d}.ckpt")
    final = State.from_arrays(t, grid, y)
    return final, records


# maximum principle ---------------------------------------------------------------


def theta0_deficit(theta: SpectralScalar) -> float:
    """Θ₀ = |(θ - 1)₊| + |(θ + 1)₋| by quadrature on the collocation grid."""
    vals = to_physical(theta)
    vol = theta.grid.omega_vol
    pos = np.maximum(vals - 1.0, 0.0)
    neg = np.maximum(-(vals + 1.0), 0.0)
    return math.sqrt(vol * np.mean(pos**2)) + math.sqrt(vol * np.mean(neg**2))


def max_principle_check(
    record: DiagnosticsRecord, theta0: float, params: PhysParams
) -> tuple[bool, float]:
    """Check |θ(t)| ≤ |Ω|^{1/2} + Θ₀ e^{-κt}; returns (passed, margin)."""
    bound = math.sqrt(params.omega_vol) + theta0 * math.exp(-params.kappa * record.t)
    tol = 1e-8 + 1e-6 * bound
    margin = bound + tol - record.theta_l2
    return margin >= 0, margin
