"""Single runs and parameter sweeps with CSV and manifest output."""
from __future__ import annotations

import csv
import itertools
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .config import PHYSICAL_AXES, ScenarioConfig, load_config
from .contrast import (
    LibrationSummary,
    MismatchSet,
    closed_kappa,
    contrast_thermal,
    delta_beta_bound,
    initial_amplitude,
    libration_summary,
    mismatches,
    occupation_number,
)
from .dynamics import ArmPair, ArmTrajectory, IntegrationError, hold_stage_energy_drift, momentum_drift, run_pair
from .field import STAGE_NAMES
from .units import ConfigError, ScenarioParams

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2

TRAJECTORY_COLUMNS = ("t", "z", "z_dot", "beta", "beta_dot", "alpha", "gamma", "s", "stage")
SWEEP_COLUMNS = (
    "mass", "omega0", "DL_ratio", "dp_over_hbar", "n", "T_lib", "C_zero", "C_thermal",
    "delta_alpha", "delta_gamma", "delta_beta", "A_beta0", "kappa0",
    # appended after the fixed columns
    "E_strain", "max_delta_z",
)

CLOSURE_TOL = 1e-2
MOMENTUM_TOL = 1e-9
HOLD_ENERGY_TOL = 1e-6
SYMMETRY_TOL = 0.05


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    return f"{v:.12e}"


def _status(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


@dataclass(frozen=True)
class PointResult:
    """Everything a sweep row needs from one simulated pair (cheap to pickle)."""

    params: ScenarioParams
    max_delta_z: float
    mismatch: Optional[MismatchSet]
    summary: Optional[LibrationSummary]
    checks: dict
    error: Optional[str] = None


def invariant_checks(pair: ArmPair, mismatch: Optional[MismatchSet], params: ScenarioParams) -> dict:
    """Closure, conservation, symmetry and window checks for one pair."""
    dz, dzd = np.abs(pair.delta_z), np.abs(pair.delta_z_dot)
    pos = float(dz[-1] / dz.max()) if dz.max() > 0 else 0.0
    vel = float(dzd[-1] / dzd.max()) if dzd.max() > 0 else 0.0
    checks: dict = {
        "closure": {
            "position_rel": pos,
            "velocity_rel": vel,
            "tolerance": CLOSURE_TOL,
            "status": _status(pos <= CLOSURE_TOL and vel <= CLOSURE_TOL),
        }
    }
    window = pair.plus.window
    checks["omega0_window"] = {
        "r1": window.r1, "r2": window.r2, "r3": window.r3,
        "status": "PASS" if window.passed else "FAIL",
        "line": window.to_line(),
    }
    if params.omega0 > 0:
        drift = [momentum_drift(arm, params) for arm in (pair.plus, pair.minus)]
        pa = max(d[0] for d in drift)
        pg = max(d[1] for d in drift)
        checks["momentum_conservation"] = {
            "p_alpha_rel": pa, "p_gamma_rel": pg, "tolerance": MOMENTUM_TOL,
            "status": _status(max(pa, pg) <= MOMENTUM_TOL),
        }
        energy = max(hold_stage_energy_drift(arm, params) for arm in (pair.plus, pair.minus))
        checks["hold_energy"] = {"relative_spread": energy, "tolerance": HOLD_ENERGY_TOL,
                                 "status": _status(energy <= HOLD_ENERGY_TOL)}
        if mismatch is not None:
            checks["mismatch_symmetry"] = {
                "residual": mismatch.symmetry_residual, "tolerance": SYMMETRY_TOL,
                "status": _status(mismatch.symmetry_residual <= SYMMETRY_TOL),
            }
            bound = delta_beta_bound(params)
            checks["delta_beta_bound"] = {
                "delta_beta": abs(mismatch.delta_beta), "bound": bound,
                "status": _status(abs(mismatch.delta_beta) <= bound),
            }
    return checks


def evaluate(params: ScenarioParams, options, labels=None) -> tuple[ArmPair, Optional[MismatchSet], Optional[LibrationSummary]]:
    pair = run_pair(params, options=options, labels=labels)
    if params.omega0 > 0:
        summary = libration_summary(pair)
        return pair, mismatches(pair, summary), summary
    return pair, None, None


def _evaluate_point(params: ScenarioParams, options, labels) -> PointResult:
    try:
        pair, mm, summary = evaluate(params, options, labels)
    except IntegrationError as exc:
        return PointResult(params, math.nan, None, None, {}, error=str(exc))
    # Drop the trajectory arrays; only the scalars travel back to the aggregator.
    slim = None
    if summary is not None:
        empty = np.empty(0)
        slim = replace(summary, t=empty, beta_bar_plus=empty, beta_bar_minus=empty)
    return PointResult(params, pair.max_separation, mm, slim, invariant_checks(pair, mm, params))


def contrast_row(result: PointResult, dp: float, dp_gamma, n, T_lib) -> dict:
    p = result.params
    g = p.geometry
    row = {
        "mass": p.mass, "omega0": p.omega0, "DL_ratio": g.DL_ratio, "dp_over_hbar": dp,
        "n": n, "T_lib": T_lib, "E_strain": p.E_strain, "max_delta_z": result.max_delta_z,
    }
    nan = math.nan
    if result.mismatch is None or p.omega0 <= 0:
        row.update(C_zero=nan, C_thermal=nan, delta_alpha=nan, delta_gamma=nan, delta_beta=nan,
                   A_beta0=nan, kappa0=nan)
        if n is None and T_lib is not None:
            row["n"] = nan
        return row
    if n is None:
        n = occupation_number(T_lib, p.omega0, p)
        row["n"] = n
    rep = contrast_thermal(result.mismatch, result.summary, dp, dp_gamma, p, g, n=n)
    row.update(
        C_zero=rep.C_zero, C_thermal=rep.C_thermal,
        delta_alpha=result.mismatch.delta_alpha, delta_gamma=result.mismatch.delta_gamma,
        delta_beta=result.mismatch.delta_beta, A_beta0=initial_amplitude(p, g), kappa0=rep.kappa0_abs,
    )
    return row


def write_trajectory_csv(arm: ArmTrajectory, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for i in range(arm.t.size):
            y = arm.y[i]
            w.writerow([_fmt(arm.t[i]), *(_fmt(v) for v in y), str(int(arm.s[i])), STAGE_NAMES[int(arm.stage[i])]])


def write_sweep_csv(rows: list[dict], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in SWEEP_COLUMNS])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_manifest(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def _apply_flags(cfg: ScenarioConfig, strict_bnv: bool, fixed_step: bool, dense_grid: bool) -> ScenarioConfig:
    opts = cfg.options
    if strict_bnv:
        opts = replace(opts, strict_bnv=True)
    if fixed_step:
        opts = replace(opts, fixed_step=True)
    if dense_grid:
        opts = replace(opts, dense=True)
    cfg.options = opts
    return cfg


def _contrast_settings(cfg: ScenarioConfig):
    n, T_lib = cfg.n, cfg.T_lib
    if T_lib is not None and n is None:
        return None, T_lib
    return (0.0 if n is None else n), T_lib if n is None else None


def _error(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def run_scenario(
    config_path: Optional[str] = None,
    out_dir: str = ".",
    preset: Optional[str] = None,
    strict_bnv: bool = False,
    fixed_step: bool = False,
    dense_grid: bool = False,
) -> int:
    """Integrate one pair; write both arm CSVs, a contrast CSV and a manifest."""
    try:
        cfg = _apply_flags(load_config(config_path, preset), strict_bnv, fixed_step, dense_grid)
        if cfg.axes:
            raise ConfigError("axis entries need the 'sweep' command", key=f"axis.{cfg.axes[0].name}")
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
    except ConfigError as exc:
        _error(f"{exc} [key: {exc.key}]")
        return EXIT_CONFIG
    except OSError as exc:
        _error(f"cannot create output directory: {exc}")
        return EXIT_RUNTIME

    params = cfg.params
    wall = time.perf_counter()
    try:
        pair, mm, summary = evaluate(params, cfg.options, cfg.labels)
    except IntegrationError as exc:
        _error(f"integration failed: {exc}")
        return EXIT_RUNTIME
    checks = invariant_checks(pair, mm, params)
    result = PointResult(params, pair.max_separation, mm, summary, checks)
    n, T_lib = _contrast_settings(cfg)
    rows = [contrast_row(result, dp, cfg.dp_gamma_over_hbar, n, T_lib) for dp in cfg.dp_over_hbar]

    files = {"arm_plus": "arm_plus.csv", "arm_minus": "arm_minus.csv", "contrast": "contrast.csv"}
    write_trajectory_csv(pair.plus, out / files["arm_plus"])
    write_trajectory_csv(pair.minus, out / files["arm_minus"])
    write_sweep_csv(rows, out / files["contrast"])
    extra = {}
    if mm is not None:
        extra["delta_alpha_area_estimate"] = mm.delta_alpha_sigma
        extra["kappa_closed"] = list(closed_kappa(pair, summary))
    write_manifest(out / "manifest.json", {
        "kind": "run",
        "scenario_hash": params.digest(),
        "source": cfg.source,
        "preset": cfg.preset,
        "labels": {"plus": [pair.plus.s_initial, pair.plus.s_final],
                   "minus": [pair.minus.s_initial, pair.minus.s_final]},
        "params": params.as_dict(),
        "options": asdict(cfg.options),
        "wall_time_s": time.perf_counter() - wall,
        "integrator_stats": {"plus": pair.plus.stats, "minus": pair.minus.stats},
        "max_delta_z": pair.max_separation,
        "diagnostics": extra,
        "invariant_checks": checks,
        "files": files,
    })
    print(checks["omega0_window"]["line"])
    print(f"closure: {checks['closure']['status']} max_delta_z={pair.max_separation:.6e} m -> {out}")
    return EXIT_OK


def _grid(cfg: ScenarioConfig):
    """Cartesian product of the axes, last axis fastest (lexicographic in axis order)."""
    names = [a.name for a in cfg.axes]
    for combo in itertools.product(*(a.values for a in cfg.axes)):
        yield dict(zip(names, combo))


def _physical(cfg: ScenarioConfig, point: dict) -> ScenarioParams:
    changes = {k: point[k] for k in PHYSICAL_AXES if k in point}
    return cfg.params.replace(**changes) if changes else cfg.params


def run_sweep(
    config_path: Optional[str] = None,
    out_dir: str = ".",
    preset: Optional[str] = None,
    strict_bnv: bool = False,
    fixed_step: bool = False,
    dense_grid: bool = False,
    max_workers: Optional[int] = None,
) -> int:
    """Cartesian-product sweep; one aggregate CSV plus a manifest."""
    try:
        cfg = _apply_flags(load_config(config_path, preset), strict_bnv, fixed_step, dense_grid)
        if not cfg.axes:
            raise ConfigError("a sweep needs at least one axis.<name> entry", key="axis")
        points = list(_grid(cfg))
        physical = [_physical(cfg, p) for p in points]
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
    except ConfigError as exc:
        _error(f"{exc} [key: {exc.key}]")
        return EXIT_CONFIG
    except OSError as exc:
        _error(f"cannot create output directory: {exc}")
        return EXIT_RUNTIME

    wall = time.perf_counter()
    unique: list[ScenarioParams] = []
    for p in physical:
        if p not in unique:
            unique.append(p)
    workers = max(1, min(len(unique), max_workers or os.cpu_count() or 1))
    if workers == 1:
        results = [_evaluate_point(p, cfg.options, cfg.labels) for p in unique]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_evaluate_point, p, cfg.options, cfg.labels) for p in unique]
            results = [f.result() for f in futures]
    by_params = {r.params.digest(): r for r in results}

    n0, T0 = _contrast_settings(cfg)
    rows = []
    for point, p in zip(points, physical):
        res = by_params[p.digest()]
        dp = point.get("dp", cfg.dp_over_hbar[0])
        if "n" in point:
            n, T_lib = point["n"], None
        elif "T_lib" in point:
            n, T_lib = None, point["T_lib"]
        else:
            n, T_lib = n0, T0
        rows.append(contrast_row(res, dp, cfg.dp_gamma_over_hbar, n, T_lib))

    write_sweep_csv(rows, out / "sweep.csv")
    failures = [{"params_hash": r.params.digest(), "error": r.error} for r in results if r.error]
    write_manifest(out / "manifest.json", {
        "kind": "sweep",
        "scenario_hash": cfg.params.digest(),
        "source": cfg.source,
        "preset": cfg.preset,
        "axes": {a.name: list(a.values) for a in cfg.axes},
        "params": cfg.params.as_dict(),
        "options": asdict(cfg.options),
        "workers": workers,
        "wall_time_s": time.perf_counter() - wall,
        "invariant_checks": [
            {"params_hash": r.params.digest(), "mass": r.params.mass, "omega0": r.params.omega0,
             "DL_ratio": r.params.geometry.DL_ratio, "E_strain": r.params.E_strain,
             "checks": r.checks or {"integration": {"status": "FAIL", "error": r.error}}}
            for r in results
        ],
        "failures": failures,
        "files": {"sweep": "sweep.csv"},
    })
    print(f"sweep: {len(rows)} rows from {len(unique)} simulations -> {out / 'sweep.csv'}")
    if failures:
        _error(f"{len(failures)} sweep point(s) failed to integrate; see manifest.json")
        return EXIT_RUNTIME
    return EXIT_OK
