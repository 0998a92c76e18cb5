"""Flat ``key = value`` scenario files, sweep axes and named presets.

Example::

    # start from a preset, then override
    preset = table1_m1e-17
    mass = 5e-18
    E_strain_hz_times_h = 4.78e7
    dp_over_hbar = 10
    axis.omega0 = 6.283e4, 5.027e5, 8, log
    axis.dp = 1; 10; 25

A ``_hz_times_h`` suffix marks an energy (or J/T moment) quoted as a
frequency and multiplied by Planck's constant on load.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .dynamics import IntegratorOptions
from .units import CONSTANTS, ConfigError, ScenarioParams

HZ_SUFFIX = "_hz_times_h"
PARAM_KEYS = {f.name for f in dataclasses.fields(ScenarioParams)} - {"constants"}
HZ_KEYS = {"D_zfs", "E_strain", "mu_spin"}
OPTION_KEYS = {
    "rtol": float,
    "atol": float,
    "n_output": int,
    "n_dense": int,
    "steps_per_period": int,
    "max_steps": int,
    "strict_bnv": "bool",
    "fixed_step": "bool",
    "dense_grid": "bool",
    "fixed_method": str,
}
CONTRAST_KEYS = {"dp_over_hbar", "dp_gamma_over_hbar", "n", "T_lib"}
AXIS_NAMES = ("mass", "omega0", "DL_ratio", "dp", "n", "T_lib", "E_strain")
PHYSICAL_AXES = ("mass", "omega0", "DL_ratio", "E_strain")


@dataclass(frozen=True)
class Axis:
    name: str
    values: tuple

    def __post_init__(self):
        if not self.values:
            raise ConfigError(f"axis.{self.name} is empty", key=f"axis.{self.name}")


@dataclass
class ScenarioConfig:
    params: ScenarioParams
    options: IntegratorOptions
    dp_over_hbar: tuple = (1.0,)
    dp_gamma_over_hbar: Optional[float] = None
    n: Optional[float] = 0.0
    T_lib: Optional[float] = None
    labels: Optional[tuple] = None
    axes: list = field(default_factory=list)
    source: str = ""
    preset: Optional[str] = None


def _parse_bool(key: str, text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}", key=key)


def _parse_float(key: str, text: str) -> float:
    t = text.strip()
    try:
        if t.lower() in ("none", "null"):
            return None
        return float(t)
    except ValueError:
        pass
    # Allow simple products such as "2*pi*1e4".
    value = 1.0
    for factor in t.split("*"):
        factor = factor.strip()
        if factor == "pi":
            value *= math.pi
            continue
        try:
            value *= float(factor)
        except ValueError:
            raise ConfigError(f"{key}: cannot parse number {text!r}", key=key) from None
    return value


def parse_axis(name: str, text: str) -> Axis:
    key = f"axis.{name}"
    base = name[: -len(HZ_SUFFIX)] if name.endswith(HZ_SUFFIX) else name
    if base not in AXIS_NAMES:
        raise ConfigError(f"unknown sweep axis {name!r}; choose from {', '.join(AXIS_NAMES)}", key=key)
    scale_h = CONSTANTS.h if name.endswith(HZ_SUFFIX) else 1.0
    if base not in HZ_KEYS and scale_h != 1.0:
        raise ConfigError(f"{key}: the {HZ_SUFFIX} suffix only applies to energies", key=key)
    text = text.strip()
    if not text:
        raise ConfigError(f"{key} is empty", key=key)
    if ";" in text:
        values = [_parse_float(key, v) for v in text.split(";") if v.strip()]
    else:
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise ConfigError(f"{key}: expected 'start,stop,count,lin|log' or 'v1; v2; ...'", key=key)
        start, stop = _parse_float(key, parts[0]), _parse_float(key, parts[1])
        try:
            count = int(parts[2])
        except ValueError:
            raise ConfigError(f"{key}: count must be an integer", key=key) from None
        scale = parts[3].lower()
        if count < 1:
            raise ConfigError(f"{key}: count must be >= 1", key=key)
        if scale == "lin":
            values = list(np.linspace(start, stop, count))
        elif scale == "log":
            if start <= 0 or stop <= 0:
                raise ConfigError(f"{key}: log axis needs positive bounds", key=key)
            values = list(np.geomspace(start, stop, count))
        else:
            raise ConfigError(f"{key}: scale must be 'lin' or 'log'", key=key)
    return Axis(base, tuple(float(v) * scale_h for v in values))


def parse_text(text: str, source: str = "<string>", base: Optional[dict] = None) -> dict:
    """Parse config text into a raw mapping. Later keys override earlier ones."""
    raw = dict(base or {})
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'", key=line)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key", key="")
        raw[key] = value
    return raw


def build_config(raw: dict, source: str = "") -> ScenarioConfig:
    """Turn a raw key/value mapping into validated parameters, options and axes."""
    raw = dict(raw)
    preset = raw.pop("preset", None)
    if preset is not None:
        merged = parse_text(preset_text(preset), f"preset:{preset}")
        # A shape key given by the user replaces the preset's other one.
        for mine, other in (("DL_ratio", "L_height"), ("L_height", "DL_ratio")):
            if mine in raw and other not in raw:
                merged.pop(other, None)
        merged.update(raw)
        raw = merged
        raw.pop("preset", None)

    param_kw: dict = {}
    opt_kw: dict = {}
    cfg_kw: dict = {}
    axes: list = []
    for key, value in raw.items():
        if key.startswith("axis."):
            axes.append(parse_axis(key[5:], value))
            continue
        base = key[: -len(HZ_SUFFIX)] if key.endswith(HZ_SUFFIX) else key
        if base in PARAM_KEYS:
            if key.endswith(HZ_SUFFIX):
                if base not in HZ_KEYS:
                    raise ConfigError(f"{key}: the {HZ_SUFFIX} suffix only applies to energies", key=key)
                v = _parse_float(key, value)
                if v is None:
                    raise ConfigError(f"{key} needs a number", key=key)
                param_kw[base] = v * CONSTANTS.h
            else:
                param_kw[base] = _parse_float(key, value)
            if param_kw[base] is None and base not in ("L_height", "DL_ratio"):
                raise ConfigError(f"{key} needs a number", key=key)
        elif key in OPTION_KEYS:
            kind = OPTION_KEYS[key]
            if kind == "bool":
                opt_kw[key] = _parse_bool(key, value)
            elif kind is str:
                opt_kw[key] = value.strip()
            else:
                v = _parse_float(key, value)
                opt_kw[key] = kind(v)
        elif key == "dp_over_hbar":
            cfg_kw[key] = tuple(_parse_float(key, v) for v in value.replace(";", ",").split(",") if v.strip())
        elif key in CONTRAST_KEYS:
            cfg_kw[key] = _parse_float(key, value)
        elif key == "labels":
            try:
                labels = tuple(int(v) for v in value.split(","))
            except ValueError:
                raise ConfigError("labels must be two integers, e.g. '1,-1'", key=key) from None
            if len(labels) != 2 or not set(labels) <= {-1, 0, 1}:
                raise ConfigError("labels must be two spin values from {-1, 0, 1}", key=key)
            cfg_kw["labels"] = labels
        else:
            raise ConfigError(f"unknown configuration key {key!r}", key=key)

    for key in ("n", "T_lib"):
        if cfg_kw.get(key) is not None and cfg_kw[key] < 0:
            raise ConfigError(f"{key} must be >= 0", key=key)
    for v in cfg_kw.get("dp_over_hbar", (1.0,)):
        if not v > 0:
            raise ConfigError("dp_over_hbar must be > 0", key="dp_over_hbar")
    if "T_lib" in cfg_kw and "n" not in cfg_kw:
        cfg_kw["n"] = None

    # Shape keys are exclusive: giving one clears the preset's other.
    if param_kw.get("DL_ratio") is not None and "L_height" not in param_kw:
        param_kw["L_height"] = None
    if param_kw.get("L_height") is not None and "DL_ratio" not in param_kw:
        param_kw["DL_ratio"] = None
    if any(a.name == "DL_ratio" for a in axes):
        param_kw.setdefault("DL_ratio", 1.0)
        param_kw["L_height"] = None

    params = ScenarioParams(**param_kw)
    dense = opt_kw.pop("dense_grid", False)
    try:
        options = IntegratorOptions(dense=dense, **opt_kw)
    except ValueError as exc:
        raise ConfigError(str(exc), key=next(iter(opt_kw), "options")) from None
    names = [a.name for a in axes]
    if len(set(names)) != len(names):
        dup = next(n for n in names if names.count(n) > 1)
        raise ConfigError(f"axis.{dup} given twice", key=f"axis.{dup}")
    if "n" in names and "T_lib" in names:
        raise ConfigError("sweep either n or T_lib, not both", key="axis.T_lib")
    return ScenarioConfig(params=params, options=options, axes=axes, source=source, preset=preset, **cfg_kw)


def load_config(path: Optional[str | Path] = None, preset: Optional[str] = None) -> ScenarioConfig:
    """Read a config file, optionally layered on top of a named preset."""
    raw: dict = {}
    if preset is not None:
        raw["preset"] = preset
    source = f"preset:{preset}" if preset else ""
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}", key="config") from None
        file_raw = parse_text(text, str(path))
        if preset is not None and "preset" in file_raw and file_raw["preset"] != preset:
            raise ConfigError("config file and --preset name different presets", key="preset")
        raw.update(file_raw)
        source = str(path)
    if not raw:
        raise ConfigError("no configuration given (pass a file or --preset)", key="config")
    return build_config(raw, source)


_D_HZ = 2.87e9
PRESETS = {
    "table1_m1e-17": """
        mass = 1e-17
        L_height = 100e-9
        omega0 = 2*pi*1e4
        beta0 = 0.01
        dp_over_hbar = 1, 10, 25
    """,
    "fig5_mass_sweep": """
        L_height = 100e-9
        dp_over_hbar = 1
        axis.mass = 5e-18, 1e-16, 7, log
    """,
    "fig6_contrast": """
        mass = 1e-17
        L_height = 100e-9
        axis.omega0 = 2*pi*1e4; 2*pi*2e4; 2*pi*4e4; 2*pi*8e4
        axis.dp = 1; 10; 25
    """,
    "appendixC_E_sweep": f"""
        mass = 1e-17
        L_height = 100e-9
        dp_over_hbar = 1
        axis.E_strain_hz_times_h = 0; {_D_HZ / 60!r}; {_D_HZ / 12!r}; {_D_HZ / 6!r}; {_D_HZ / 3!r}
    """,
    "appendixD_omega0_zero": """
        mass = 1e-17
        L_height = 100e-9
        omega0 = 0
        beta0 = 0
    """,
    "appendixE_long_cylinder": """
        dp_over_hbar = 1
        axis.DL_ratio = 0.1; 1; 10
        axis.mass = 5e-18; 1e-17; 1e-16
    """,
}


def preset_text(name: str) -> str:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}", key="preset") from None


def preset_config(name: str) -> ScenarioConfig:
    return load_config(preset=name)
