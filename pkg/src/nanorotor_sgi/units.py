"""Physical constants, scenario parameters and cylinder geometry (SI throughout).

Energies that are conventionally quoted as ``h * frequency`` (zero-field
splittings, the spin magnetic moment per tesla) are converted to joules once,
when a :class:`ScenarioParams` is built from frequency-style inputs, so the
rest of the package never mixes unit systems.
"""
from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class ConfigError(ValueError):
    """Invalid or inconsistent scenario configuration.

    ``key`` names the offending parameter so callers can report it.
    """

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


@dataclass(frozen=True)
class PhysicalConstants:
    h: float = 6.62607015e-34
    hbar: float = 6.62607015e-34 / (2.0 * math.pi)
    mu0: float = 1.257e-6  # rounded value used in the reference parameter table
    kB: float = 1.380649e-23

    def __post_init__(self):
        for name in ("h", "hbar", "mu0", "kB"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive", key=name)
        if abs(self.hbar - self.h / (2.0 * math.pi)) > 1e-12 * self.hbar:
            raise ConfigError("hbar must equal h/(2 pi)", key="hbar")


CONSTANTS = PhysicalConstants()

# Frequency-style reference values; multiplied by h in ScenarioParams.from_frequencies.
D_ZFS_HZ = 2.87e9
MU_SPIN_HZ_PER_T = 2.8e10


@dataclass(frozen=True)
class ScenarioParams:
    """Every physical and protocol constant of one interferometer run.

    Attributes are SI: ``D_zfs`` and ``E_strain`` in J, ``mu_spin`` in J/T.
    ``L_height`` and ``DL_ratio`` are alternative ways of fixing the cylinder
    aspect; set exactly one of them (the other is ``None``).
    """

    mass: float = 1e-17
    density: float = 3.5e3
    chi_rho: float = -6.2e-9
    D_zfs: float = CONSTANTS.h * D_ZFS_HZ
    E_strain: float = 0.0
    mu_spin: float = CONSTANTS.h * MU_SPIN_HZ_PER_T
    d_off: float = 10e-9
    alpha_prime: float = math.pi / 6
    beta0: float = 0.01
    omega0: float = 2 * math.pi * 1e4
    L_height: Optional[float] = 100e-9
    DL_ratio: Optional[float] = None
    B0: float = 1e-2
    B1: float = 1e-4
    eta: float = 45.0
    tau1: float = 0.482
    tau2: float = 0.514
    t_flip: float = 0.8022
    t_closed: float = 1.320
    ramp_width: float = 0.0
    constants: PhysicalConstants = field(default=CONSTANTS, compare=True)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for key in ("mass", "density", "B0", "eta", "D_zfs", "mu_spin"):
            value = getattr(self, key)
            if not (np.isfinite(value) and value > 0):
                raise ConfigError(f"{key} must be finite and > 0, got {value!r}", key=key)
        for key in ("chi_rho", "B1", "d_off", "alpha_prime", "omega0", "ramp_width"):
            if not np.isfinite(getattr(self, key)):
                raise ConfigError(f"{key} must be finite", key=key)
        if not 0.0 <= self.E_strain <= self.D_zfs / 3.0 * (1 + 1e-12):
            raise ConfigError(
                f"E_strain must satisfy 0 <= E <= D/3 ({self.D_zfs / 3:.4e} J), got {self.E_strain:.4e}",
                key="E_strain",
            )
        if not 0.0 < self.tau1 < self.tau2 < self.t_flip < self.t_closed:
            raise ConfigError("timing must satisfy 0 < tau1 < tau2 < t_flip < t_closed", key="tau1")
        # beta0 = 0 is admitted only without initial rotation (the omega0 = 0 scheme
        # starts aligned with the field).
        lo_ok = self.beta0 > 0.0 or (self.beta0 == 0.0 and self.omega0 == 0.0)
        if not (lo_ok and self.beta0 < math.pi / 2):
            raise ConfigError(f"beta0 must lie in (0, pi/2), got {self.beta0!r}", key="beta0")
        if self.omega0 < 0:
            raise ConfigError("omega0 must be >= 0", key="omega0")
        if self.d_off < 0:
            raise ConfigError("d_off must be >= 0", key="d_off")
        if self.ramp_width < 0:
            raise ConfigError("ramp_width must be >= 0", key="ramp_width")
        has_l = self.L_height is not None
        has_r = self.DL_ratio is not None
        if has_l == has_r:
            raise ConfigError(
                "exactly one of L_height and DL_ratio must be given", key="L_height" if has_l else "DL_ratio"
            )
        shape_key = "L_height" if has_l else "DL_ratio"
        shape_val = self.L_height if has_l else self.DL_ratio
        if not (np.isfinite(shape_val) and shape_val > 0):
            raise ConfigError(f"{shape_key} must be > 0", key=shape_key)

    @classmethod
    def from_frequencies(
        cls,
        D_hz: float = D_ZFS_HZ,
        E_hz: float = 0.0,
        mu_hz_per_T: float = MU_SPIN_HZ_PER_T,
        constants: PhysicalConstants = CONSTANTS,
        **kwargs,
    ) -> "ScenarioParams":
        """Build from ``h * frequency`` style inputs (Hz, Hz, Hz/T)."""
        h = constants.h
        return cls(D_zfs=h * D_hz, E_strain=h * E_hz, mu_spin=h * mu_hz_per_T, constants=constants, **kwargs)

    def replace(self, **changes) -> "ScenarioParams":
        if "DL_ratio" in changes and changes["DL_ratio"] is not None and "L_height" not in changes:
            changes["L_height"] = None
        if "L_height" in changes and changes["L_height"] is not None and "DL_ratio" not in changes:
            changes["DL_ratio"] = None
        return dataclasses.replace(self, **changes)

    @property
    def Z0(self) -> float:
        return self.B0 / self.eta

    @property
    def geometry(self) -> "CylinderGeometry":
        return build_geometry(self.mass, self.density, L_height=self.L_height, DL_ratio=self.DL_ratio)

    def as_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.name != "constants"}
        return out

    def digest(self) -> str:
        """Stable short hash of every parameter, used to tag trajectories."""
        items = sorted(self.as_dict().items())
        text = ";".join(f"{k}={v!r}" for k, v in items)
        c = self.constants
        text += f";h={c.h!r};hbar={c.hbar!r};mu0={c.mu0!r};kB={c.kB!r}"
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class CylinderGeometry:
    radius: float
    height: float
    I_perp: float
    I_3: float
    inertia_ratio: float

    @property
    def DL_ratio(self) -> float:
        return 2.0 * self.radius / self.height


def _require_positive(**values):
    for name, v in values.items():
        if not (np.isfinite(v) and v > 0):
            raise ValueError(f"{name} must be finite and > 0, got {v!r}")


def radius_from_mass(mass: float, density: float, height: float) -> float:
    """Radius of a solid cylinder of given mass, density and height."""
    _require_positive(mass=mass, density=density, height=height)
    return math.sqrt(mass / (density * math.pi * height))


def cylinder_inertia(mass: float, radius: float, height: float) -> tuple[float, float]:
    """Return ``(I_perp, I_3)`` about the centre of mass."""
    I_perp = mass * (3 * radius**2 + height**2) / 12.0
    I_3 = mass * radius**2 / 2.0
    return I_perp, I_3


def build_geometry(
    mass: float,
    density: float,
    L_height: Optional[float] = None,
    DL_ratio: Optional[float] = None,
) -> CylinderGeometry:
    """Solve the cylinder shape from its mass and either its height or D/L.

    With ``DL_ratio = r`` the radius is ``r L / 2`` and the volume condition
    ``m = rho pi R^2 L`` fixes ``L = (4 m / (rho pi r^2))^(1/3)``.
    """
    if (L_height is None) == (DL_ratio is None):
        raise ConfigError("give exactly one of L_height and DL_ratio", key="DL_ratio")
    _require_positive(mass=mass, density=density)
    if L_height is not None:
        height = float(L_height)
        radius = radius_from_mass(mass, density, height)
    else:
        _require_positive(DL_ratio=DL_ratio)
        height = (4.0 * mass / (density * math.pi * DL_ratio**2)) ** (1.0 / 3.0)
        radius = DL_ratio * height / 2.0
    I_perp, I_3 = cylinder_inertia(mass, radius, height)
    return CylinderGeometry(radius=radius, height=height, I_perp=I_perp, I_3=I_3, inertia_ratio=I_3 / I_perp)


def classify_shape(geometry: CylinderGeometry) -> str:
    """Label the aspect as ``long-cylinder``, ``normal`` or ``disk``."""
    ratio = geometry.DL_ratio
    if ratio <= 0.3:
        return "long-cylinder"
    if ratio < 3.0:
        return "normal"
    return "disk"


def table1_params(**overrides) -> ScenarioParams:
    """Reference scenario: m = 1e-17 kg, L = 100 nm, omega0 = 2 pi x 10 kHz."""
    return ScenarioParams().replace(**overrides) if overrides else ScenarioParams()
