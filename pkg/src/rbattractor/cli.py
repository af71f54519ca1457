"""
Command-line entry point.

    rbattractor simulate|bounds|nudge|report [--config FILE | --manifest FILE] [flags]
    rbattractor verify fast|full

Exit codes: 0 success, 1 configuration error, 2 numerical blow-up, 3 verify failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import fields
from concurrent.futures import ProcessPoolExecutor
from importlib import metadata
from pathlib import Path
from typing import Optional

from . import config as cfgmod
from .analysis import region_check, sharpness_ratios, trajectory_extrema
from .bounds import (
    DegenerateCurveError,
    attractor_bounds,
    bounds_from_dict,
    nudging_thresholds,
    sample_curves,
)
from .config import ConfigError
from .io import CSVSeriesWriter, load_checkpoint, read_series, save_checkpoint, write_xy
from .nudging import ErrorRecord, decay_fit, twin_run
from .params import params_from_ra_pr
from .rbsolver import (
    BlowUpError,
    DiagnosticsRecord,
    initial_state,
    max_principle_check,
    run,
    theta0_deficit,
)

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_VERIFY = 0, 1, 2, 3
WORKERS_ENV = "RBATTRACTOR_WORKERS"
COMMANDS = ("simulate", "bounds", "nudge", "report")

FLAG_KEYS = {
    "ra": "params.Ra",
    "pr": "params.Pr",
    "length": "params.L",
    "alpha": "params.alpha",
    "seed": "ic.seed",
    "out": "output.dir",
    "diagnostics": "report.diagnostics",
    "bounds_json": "report.bounds",
}


def _code_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


# command handlers: each returns a dict of output paths and summary values -------


def _simulate(cfg: dict, out: Path) -> dict:
    sim = cfgmod.build_sim(cfg)
    diag = out / "diagnostics.csv"
    ckdir = out / "checkpoints"
    with CSVSeriesWriter(diag, DiagnosticsRecord.columns()) as sink:
        state0 = initial_state(sim)
        final, records = run(sim, sink=sink, checkpoint_dir=ckdir, state=state0)
    save_checkpoint(out / "final.ckpt", final, sim.params)
    theta0 = theta0_deficit(state0.theta)
    margins = [max_principle_check(r, theta0, sim.params)[1] for r in records]
    summary = {
        "t_final": final.t,
        "n_records": len(records),
        "theta0_deficit": theta0,
        "max_principle_ok": all(m >= 0 for m in margins),
        "max_principle_min_margin": min(margins),
    }
    cfgmod.write_json(out / "summary.json", summary)
    return {
        "outputs": {
            "diagnostics": str(diag),
            "final_checkpoint": str(out / "final.ckpt"),
            "checkpoints": str(ckdir),
            "summary": str(out / "summary.json"),
        },
        "summary": summary,
    }


def _bounds(cfg: dict, out: Path) -> dict:
    p = cfg["params"]
    params = cfgmod._wrap("params", lambda: params_from_ra_pr(p["Ra"], p["Pr"], p["L"]))
    consts = cfgmod.build_constants(cfg)
    b = attractor_bounds(params, consts, p["alpha"], cfg["bounds"]["theta_form"])
    k = nudging_thresholds(params, b)
    doc = {
        "params": params.as_dict(),
        **b.as_dict(),
        "thresholds": {"K1": k.K1, "K2": k.K2, "h_star": k.h_star, "note": "implied constants set to 1"},
        "c3_reconstructed": cfg["bounds_constants"]["c3"] is None,
    }
    cfgmod.write_json(out / "bounds.json", doc)
    z, q, phi, eta = sample_curves(*b.require_curves(), cfg["bounds"]["n_samples"], cfg["bounds"]["decades"])
    write_xy(out / "curve_f.csv", ["z", "q"], z, q)
    write_xy(out / "curve_g.csv", ["phi", "eta"], phi, eta)
    return {
        "outputs": {
            "bounds": str(out / "bounds.json"),
            "curve_f": str(out / "curve_f.csv"),
            "curve_g": str(out / "curve_g.csv"),
        },
        "summary": {"z_max": b.z_max, "q2_exact": b.q2_exact, "eta1_exact": b.eta1_exact},
    }


def _nudge(cfg: dict, out: Path) -> dict:
    ncfg = cfgmod.build_nudge(cfg)
    nd = cfg["nudging"]
    ref_state = None
    if nd["ref_checkpoint"]:
        try:
            ref_state, ref_params, _ = load_checkpoint(nd["ref_checkpoint"])
        except (OSError, ValueError) as exc:
            raise ConfigError("nudging.ref_checkpoint", str(exc)) from exc
        if ref_state.grid != ncfg.sim.grid:
            raise ConfigError("nudging.ref_checkpoint", "checkpoint grid differs from grid section")
        if not (math.isclose(ref_params.nu, ncfg.sim.params.nu) and math.isclose(ref_params.kappa, ncfg.sim.params.kappa)):
            raise ConfigError("nudging.ref_checkpoint", "checkpoint parameters differ from params section")
    errors = out / "errors.csv"
    with CSVSeriesWriter(errors, [f.name for f in fields(ErrorRecord)]) as sink:
        res = twin_run(ncfg, ref_state=ref_state, sink=sink)
    window = tuple(nd["fit_window"]) if nd["fit_window"] else None
    try:
        fit = decay_fit(res.records, window, nd["fit_floor"])
    except ValueError as exc:
        raise ConfigError("nudging.fit_window", str(exc)) from exc
    summary = {
        "mu": ncfg.mu,
        "m": ncfg.interp.stride,
        "h": ncfg.interp.h,
        "h_definition": "max(m*L/n1, 2*m/n2) on the uniform extended grid",
        "mode": ncfg.interp.mode,
        "rate": fit.rate,
        "r_squared": fit.r_squared,
        "floor_reached": fit.floor_reached,
        "orders_of_decay": fit.orders_of_decay,
        "initial_error": res.records[0].total,
        "final_error": res.records[-1].total,
    }
    cfgmod.write_json(out / "summary.json", summary)
    save_checkpoint(out / "reference_final.ckpt", res.reference, ncfg.sim.params)
    save_checkpoint(out / "auxiliary_final.ckpt", res.auxiliary, ncfg.sim.params)
    return {
        "outputs": {"errors": str(errors), "summary": str(out / "summary.json")},
        "summary": summary,
    }


def _report(cfg: dict, out: Path) -> dict:
    rep = cfg["report"]
    for key in ("diagnostics", "bounds"):
        if not rep[key]:
            raise ConfigError(f"report.{key}", "required for the report command")
    try:
        series = read_series(rep["diagnostics"], DiagnosticsRecord)
        with open(rep["bounds"]) as fh:
            b = bounds_from_dict(json.load(fh))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError("report", f"cannot read inputs: {exc}") from exc
    if not series:
        raise ConfigError("report.diagnostics", "series is empty")
    t_tr = rep["t_transient"]
    if t_tr is None:
        t_tr = 0.2 * series[-1].t
    try:
        ext = trajectory_extrema(series, t_tr, rep["min_samples"])
    except ValueError as exc:
        raise ConfigError("report.t_transient", str(exc)) from exc
    curves = b.require_curves()
    sharp = sharpness_ratios(ext, b, rep["bounds_used"])
    violations = region_check(series, *curves, t_tr)
    doc = {
        "extrema": ext.__dict__,
        "sharpness": sharp.as_dict(),
        "n_violations": len(violations),
        "constants": b.constants.as_dict(),
    }
    cfgmod.write_json(out / "sharpness.json", doc)
    with open(out / "violations.csv", "w") as fh:
        fh.write("index,t,quantity,value,bound\n")
        for v in violations:
            fh.write(f"{v.index},{v.t!r},{v.quantity},{v.value!r},{v.bound!r}\n")
    return {
        "outputs": {"sharpness": str(out / "sharpness.json"), "violations": str(out / "violations.csv")},
        "summary": {"n_violations": len(violations), "ratio_z": sharp.ratio_z},
    }


HANDLERS = {"simulate": _simulate, "bounds": _bounds, "nudge": _nudge, "report": _report}


def run_job(command: str, cfg: dict) -> int:
    """Run one command with its manifest; returns the exit code."""
    out = Path(cfg["output"]["dir"])
    out.mkdir(parents=True, exist_ok=True)
    manifest_path = out / "manifest.json"
    manifest = {
        "command": command,
        "config": cfgmod.resolve(cfg),
        "code_version": _code_version(),
        "grid": cfg["grid"],
        "params": cfg["params"],
        "constants": cfg["bounds_constants"],
        "seed": cfg["ic"]["seed"],
        "outputs": {},
        "status": "running",
        "wall_clock_s": None,
    }
    cfgmod.write_json(manifest_path, manifest)
    start = time.perf_counter()
    code = EXIT_OK
    try:
        result = HANDLERS[command](cfg, out)
        manifest["outputs"] = result["outputs"]
        manifest["summary"] = result["summary"]
        manifest["status"] = "ok"
    except (ConfigError, DegenerateCurveError) as exc:
        manifest["status"] = "config-error"
        manifest["error"] = str(exc)
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_CONFIG
    except (BlowUpError, OverflowError) as exc:
        manifest["status"] = "blow-up"
        manifest["error"] = str(exc)
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_BLOWUP
    manifest["wall_clock_s"] = time.perf_counter() - start
    cfgmod.write_json(manifest_path, manifest)
    return code


def _job_entry(args):
    return run_job(*args)


def run_sweep(command: str, cfg: dict) -> int:
    jobs = []
    root = Path(cfg["output"]["dir"])
    for i, overrides in enumerate(cfg["sweep"]):
        job = cfgmod.resolve(cfg)
        job["sweep"] = []
        for dotted, value in overrides.items():
            if dotted == "sweep" or dotted.startswith("output."):
                raise ConfigError(f"sweep[{i}].{dotted}", "cannot be overridden per job")
            cfgmod._set(job, dotted, value)
        job["output"]["dir"] = str(root / f"job_{i:03d}")
        jobs.append((command, job))
    workers = int(os.environ.get(WORKERS_ENV, "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            codes = list(pool.map(_job_entry, jobs))
    else:
        codes = [_job_entry(j) for j in jobs]
    cfgmod.write_json(
        root / "sweep_manifest.json",
        {
            "command": command,
            "config": cfgmod.resolve(cfg),
            "workers": workers,
            "jobs": [{"dir": j[1]["output"]["dir"], "exit_code": c} for j, c in zip(jobs, codes)],
        },
    )
    return max(codes, default=EXIT_OK)


# argument parsing ------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rbattractor", description=__doc__.split("\n\n")[0].strip())
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        src = p.add_mutually_exclusive_group()
        src.add_argument("--config", help="JSON configuration file")
        src.add_argument("--manifest", help="re-run the configuration recorded in a manifest")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="dotted-path override")
        p.add_argument("--ra", type=float)
        p.add_argument("--pr", type=float)
        p.add_argument("--length", type=float)
        p.add_argument("--alpha", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        if name == "report":
            p.add_argument("--diagnostics")
            p.add_argument("--bounds-json", dest="bounds_json")
    v = sub.add_parser("verify")
    v.add_argument("level", choices=("fast", "full"))
    v.add_argument("--out", default="verify_out", help="work directory for the full battery")
    sub.add_parser("schema", help="list every configuration key")
    return ap


def build_config(args: argparse.Namespace) -> dict:
    if args.manifest:
        try:
            with open(args.manifest) as fh:
                manifest = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("--manifest", f"cannot read {args.manifest}: {exc}") from exc
        if manifest.get("command") != args.command:
            raise ConfigError("--manifest", f"manifest records command {manifest.get('command')!r}")
        cfg = cfgmod.merge(cfgmod.defaults(), manifest["config"])
    else:
        cfg = cfgmod.load_config(args.config)
    for assignment in args.set:
        cfgmod.apply_override(cfg, assignment)
    for flag, dotted in FLAG_KEYS.items():
        value = getattr(args, flag, None)
        if value is not None:
            cfgmod._set(cfg, dotted, value)
    return cfg


def main(argv: Optional[list[str]] = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "schema":
        print(cfgmod.schema_doc())
        return EXIT_OK
    if args.command == "verify":
        from .verify import run_battery

        ok = run_battery(args.level, Path(args.out))
        return EXIT_OK if ok else EXIT_VERIFY
    try:
        cfg = build_config(args)
        if cfg["sweep"]:
            return run_sweep(args.command, cfg)
        return run_job(args.command, cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
