"""
Run configuration: one JSON document with fixed sections and strict keys.

Every key has a default, so a resolved configuration is always complete.
Command-line overrides use dotted paths (``grid.n1=256``). Unknown keys and
ill-typed values raise ``ConfigError`` naming the full path.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional

from .bounds import BoundConstants
from .nudging import MODES, NudgeConfig, make_interpolant
from .params import params_from_ra_pr
from .rbsolver import ICSpec, SimConfig
from .spectral import make_grid

__all__ = ["SCHEMA", "ConfigError", "apply_override", "load_config", "resolve", "schema_doc"]


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class Key:
    default: Any
    doc: str
    check: Optional[Callable[[Any], Optional[str]]] = None


def _num(positive=False, nonneg=False):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            return "expected a finite number"
        if positive and not v > 0:
            return "must be > 0"
        if nonneg and v < 0:
            return "must be >= 0"
        return None

    return check


def _int(min_value=None, even=False):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, int):
            return "expected an integer"
        if min_value is not None and v < min_value:
            return f"must be >= {min_value}"
        if even and v % 2:
            return "must be even"
        return None

    return check


def _choice(*options):
    def check(v):
        return None if v in options else f"must be one of {list(options)}"

    return check


def _dt(v):
    if v == "auto":
        return None
    return _num(positive=True)(v)


def _opt_str(v):
    return None if v is None or isinstance(v, str) else "expected a string or null"


def _opt_num(v):
    return None if v is None else _num(nonneg=True)(v)


def _sweep(v):
    if not isinstance(v, list) or not all(isinstance(j, dict) for j in v):
        return "expected a list of {dotted.key: value} objects"
    return None


def _window(v):
    if v is None:
        return None
    if (
        isinstance(v, list)
        and len(v) == 2
        and all(_num()(x) is None for x in v)
        and v[0] < v[1]
    ):
        return None
    return "expected null or [t_start, t_stop] with t_start < t_stop"


SCHEMA: dict[str, dict[str, Key]] = {
    "grid": {
        "n1": Key(128, "horizontal collocation points (even, >= 8)", _int(8, even=True)),
        "n2": Key(128, "vertical collocation points on the doubled domain (even, >= 8)", _int(8, even=True)),
        "dealias_fraction": Key(2 / 3, "retained fraction of each wavenumber range", _num(positive=True)),
    },
    "params": {
        "Ra": Key(1e5, "Rayleigh number", _num(positive=True)),
        "Pr": Key(1.0, "Prandtl number", _num(positive=True)),
        "L": Key(2.0, "horizontal period", _num(positive=True)),
        "alpha": Key(0.0, "horizontal mean velocity of the initial state", _num()),
    },
    "stepper": {
        "dt": Key("auto", "time step, or 'auto' for CFL control", _dt),
        "t_end": Key(200.0, "final time", _num(positive=True)),
        "cfl_safety": Key(0.5, "CFL safety factor", _num(positive=True)),
        "dt_max": Key(0.05, "upper cap on the automatic step", _num(positive=True)),
        "cfl_interval": Key(10, "steps between CFL re-evaluations", _int(1)),
        "diag_stride": Key(20, "steps between diagnostics records", _int(1)),
        "checkpoint_stride": Key(0, "steps between checkpoints, 0 disables", _int(0)),
    },
    "ic": {
        "kind": Key("perturbed-conduction", "initial condition family", _choice("perturbed-conduction", "zero")),
        "amplitude": Key(1e-3, "peak temperature perturbation", _num(nonneg=True)),
        "seed": Key(0, "random seed of the perturbation", _int(0)),
        "kmax": Key(8, "highest mode index in the perturbation", _int(1)),
    },
    "nudging": {
        "mu": Key(1.0, "nudging strength", _num(nonneg=True)),
        "stride": Key(8, "observation stride m", _int(1)),
        "mode": Key("block-average", "interpolant kind", _choice(*MODES)),
        "t_assim_start": Key(40.0, "reference spin-up time before assimilation", _num(nonneg=True)),
        "aux_ic": Key("zero", "auxiliary initial condition", _choice("zero", "reference")),
        "ref_checkpoint": Key(None, "checkpoint used as the reference state at assimilation start", _opt_str),
        "fit_window": Key(None, "time window [t0, t1] of the decay fit, null for the whole run", _window),
        "fit_floor": Key(0.0, "errors at or below this value end the fit window", _num(nonneg=True)),
    },
    "bounds_constants": {
        "c1": Key(1.0, "Ladyzhenskaya-chain constant", _num(positive=True)),
        "c2": Key(1.0, "Agmon constant of the palinstrophy estimate", _num(positive=True)),
        "c_agmon": Key(1.0, "constant of the temperature trilinear estimate", _num(positive=True)),
        "c3": Key(None, "null selects 2*c1**2", _opt_num),
    },
    "bounds": {
        "theta_form": Key("scaling", "temperature-gradient bound fed to the curves", _choice("scaling", "rigorous-K2")),
        "n_samples": Key(200, "samples per tabulated curve", _int(2)),
        "decades": Key(6.0, "decades spanned by the curve samples", _num(positive=True)),
    },
    "report": {
        "diagnostics": Key(None, "diagnostics CSV to analyse", _opt_str),
        "bounds": Key(None, "bounds JSON to compare against", _opt_str),
        "t_transient": Key(None, "transient cut, null for 20% of the last sample time", _opt_num),
        "bounds_used": Key("exact", "curve-derived or scaling q and eta bounds", _choice("exact", "scaling")),
        "min_samples": Key(100, "post-transient samples required", _int(1)),
    },
    "output": {
        "dir": Key("out", "output directory", lambda v: None if isinstance(v, str) else "expected a string"),
    },
}
TOP_LEVEL = {"sweep": Key([], "list of override objects, one job each", _sweep)}


def defaults() -> dict:
    cfg = {s: {k: copy.deepcopy(key.default) for k, key in keys.items()} for s, keys in SCHEMA.items()}
    cfg["sweep"] = []
    return cfg


def _lookup(path: str) -> Key:
    parts = path.split(".")
    if len(parts) == 1 and parts[0] in TOP_LEVEL:
        return TOP_LEVEL[parts[0]]
    if len(parts) != 2 or parts[0] not in SCHEMA or parts[1] not in SCHEMA[parts[0]]:
        raise ConfigError(path, "unknown configuration key")
    return SCHEMA[parts[0]][parts[1]]


def _set(cfg: dict, path: str, value: Any) -> None:
    key = _lookup(path)
    if isinstance(value, float) and value.is_integer() and isinstance(key.default, int) and not isinstance(key.default, bool):
        value = int(value)
    if key.check is not None:
        problem = key.check(value)
        if problem:
            raise ConfigError(path, f"{problem} (got {value!r})")
    parts = path.split(".")
    if len(parts) == 1:
        cfg[parts[0]] = value
    else:
        cfg[parts[0]][parts[1]] = value


def merge(cfg: dict, doc: dict, prefix: str = "") -> dict:
    """Strictly merge a (possibly partial) document into ``cfg`` in place."""
    if not isinstance(doc, dict):
        raise ConfigError(prefix or "<root>", "expected an object")
    for name, value in doc.items():
        if name in TOP_LEVEL:
            _set(cfg, name, value)
        elif name in SCHEMA:
            if not isinstance(value, dict):
                raise ConfigError(name, "expected an object")
            for key, v in value.items():
                _set(cfg, f"{name}.{key}", v)
        else:
            raise ConfigError(name, "unknown configuration section")
    return cfg


def load_config(path: Optional[str] = None, overrides: dict | None = None) -> dict:
    cfg = defaults()
    if path is not None:
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError("--config", f"cannot read {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError("--config", f"invalid JSON in {path}: {exc}") from exc
        merge(cfg, doc)
    for dotted, value in (overrides or {}).items():
        _set(cfg, dotted, value)
    return cfg


def apply_override(cfg: dict, assignment: str) -> None:
    """Apply ``key.path=value``; the value is parsed as JSON when possible."""
    if "=" not in assignment:
        raise ConfigError(assignment, "override must look like section.key=value")
    dotted, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    _set(cfg, dotted.strip(), value)


# conversion to domain objects ----------------------------------------------------


def _wrap(path: str, build: Callable):
    try:
        return build()
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc


def build_sim(cfg: dict) -> SimConfig:
    g, p, s, ic = cfg["grid"], cfg["params"], cfg["stepper"], cfg["ic"]
    if s["dt"] == "auto" and s["dt_max"] <= 0:
        raise ConfigError("stepper.dt_max", "must be > 0")
    grid = _wrap("grid", lambda: make_grid(p["L"], g["n1"], g["n2"], g["dealias_fraction"]))
    params = _wrap("params", lambda: params_from_ra_pr(p["Ra"], p["Pr"], p["L"]))
    icspec = _wrap(
        "ic",
        lambda: ICSpec(ic["kind"], ic["amplitude"], ic["seed"], p["alpha"], ic["kmax"]),
    )
    return _wrap(
        "stepper",
        lambda: SimConfig(
            params,
            grid,
            dt=s["dt"],
            t_end=s["t_end"],
            diag_stride=s["diag_stride"],
            checkpoint_stride=s["checkpoint_stride"],
            ic=icspec,
            cfl_safety=s["cfl_safety"],
            dt_max=s["dt_max"],
            cfl_interval=s["cfl_interval"],
        ),
    )


def build_constants(cfg: dict) -> BoundConstants:
    bc = cfg["bounds_constants"]
    return _wrap("bounds_constants", lambda: BoundConstants(bc["c1"], bc["c2"], bc["c_agmon"], bc["c3"]))


def build_nudge(cfg: dict) -> NudgeConfig:
    sim = build_sim(cfg)
    nd = cfg["nudging"]
    m = nd["stride"]
    if sim.grid.n1 % m or sim.grid.n2 % m:
        raise ConfigError("nudging.stride", f"{m} does not divide the grid {sim.grid.n1}x{sim.grid.n2}")
    interp = make_interpolant(sim.grid, m, nd["mode"])
    if nd["t_assim_start"] >= sim.t_end:
        raise ConfigError("nudging.t_assim_start", "must be smaller than stepper.t_end")
    return _wrap(
        "nudging",
        lambda: NudgeConfig(sim, nd["mu"], interp, nd["t_assim_start"], nd["aux_ic"]),
    )


def resolve(cfg: dict) -> dict:
    """Deep copy suitable for a manifest (all defaults already materialized)."""
    return json.loads(json.dumps(cfg))


def schema_doc() -> str:
    lines = []
    for section, keys in SCHEMA.items():
        for name, key in keys.items():
            lines.append(f"{section}.{name} (default {json.dumps(key.default)}): {key.doc}")
    for name, key in TOP_LEVEL.items():
        lines.append(f"{name} (default {json.dumps(key.default)}): {key.doc}")
    return "\n".join(lines)


def write_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
