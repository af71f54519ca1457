"""Stress-free Rayleigh-Bénard convection: spectral solver, attractor bounds and nudging."""

from .bounds import BoundConstants, attractor_bounds, build_curve_f, build_curve_g, eval_f, eval_g
from .params import PhysParams, lambda1, params_from_ra_pr
from .rbsolver import ICSpec, SimConfig, State, run
from .spectral import make_grid

__version__ = "0.1.0"

__all__ = [
    "BoundConstants",
    "ICSpec",
    "PhysParams",
    "SimConfig",
    "State",
    "attractor_bounds",
    "build_curve_f",
    "build_curve_g",
    "eval_f",
    "eval_g",
    "lambda1",
    "make_grid",
    "params_from_ra_pr",
    "run",
]
