"""Staged Stern-Gerlach field: split, hold, recombine.

The transverse ``eta * x`` component is never evaluated; motion is confined
to the z axis (x = 0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .units import ScenarioParams

SPLIT, HOLD, RECOMBINE = 0, 1, 2
STAGE_NAMES = ("split", "hold", "recombine")


@dataclass(frozen=True)
class FieldProfile:
    B0: float
    B1: float
    eta: float
    tau1: float
    tau2: float
    ramp_width: float = 0.0

    def __post_init__(self):
        if not (self.eta > 0 and self.B0 > 0):
            raise ValueError("B0 and eta must be positive")
        if not self.tau1 < self.tau2:
            raise ValueError("tau1 must precede tau2")

    @property
    def Z0(self) -> float:
        return self.B0 / self.eta

    @classmethod
    def from_params(cls, params: ScenarioParams) -> "FieldProfile":
        return cls(params.B0, params.B1, params.eta, params.tau1, params.tau2, params.ramp_width)


@dataclass(frozen=True)
class FieldSample:
    Bz: float
    dBz_dz: float
    eta_tilde: float
    stage: str


def stage_at(t: float, tau1: float, tau2: float) -> int:
    if t < tau1:
        return SPLIT
    if t <= tau2:
        return HOLD
    return RECOMBINE


@njit(cache=True)
def _stage_weights(t, tau1, tau2, ramp_width):
    # Smooth tanh blend between the three laws; a hard switch when ramp_width == 0.
    if ramp_width <= 0.0:
        if t < tau1:
            return 1.0, 0.0, 0.0
        if t <= tau2:
            return 0.0, 1.0, 0.0
        return 0.0, 0.0, 1.0
    a = 0.5 * (1.0 + math.tanh((t - tau1) / ramp_width))
    b = 0.5 * (1.0 + math.tanh((t - tau2) / ramp_width))
    return 1.0 - a, a - b, b


@njit(cache=True)
def field_law(t, z, stage, B0, B1, eta, tau1, tau2, ramp_width):
    """Return ``(Bz, eta_tilde)`` at time t and height z.

    ``stage`` selects the law directly when no ramp is used, so integration
    segments never depend on how the boundary instants are rounded.
    """
    if ramp_width <= 0.0:
        if stage == 0:
            return B0 - eta * z, -eta
        if stage == 1:
            return B1, 0.0
        return -(B0 - eta * z), eta
    w0, w1, w2 = _stage_weights(t, tau1, tau2, ramp_width)
    split = B0 - eta * z
    return w0 * split + w1 * B1 - w2 * split, -eta * w0 + eta * w2


def sample(t: float, z: float, profile: FieldProfile) -> FieldSample:
    """Field at the centre of mass."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    stage = stage_at(t, profile.tau1, profile.tau2)
    Bz, eta_t = field_law(
        t, z, stage, profile.B0, profile.B1, profile.eta, profile.tau1, profile.tau2, profile.ramp_width
    )
    # The recombine field is -(B0 - eta z), so dBz/dz equals eta_tilde in every stage.
    return FieldSample(Bz=float(Bz), dBz_dz=float(eta_t), eta_tilde=float(eta_t), stage=STAGE_NAMES[stage])


@njit(cache=True)
def defect_field(Bz, eta_t, beta, d_off, alpha_prime):
    return Bz + eta_t * d_off * math.cos(beta + alpha_prime)


def field_at_defect(t: float, z: float, beta: float, params: ScenarioParams, profile: FieldProfile) -> float:
    """Field magnitude along z at the off-centre spin, ``Bz + eta~ d cos(beta + alpha')``."""
    s = sample(t, z, profile)
    return float(defect_field(s.Bz, s.eta_tilde, beta, params.d_off, params.alpha_prime))


def field_track(t: np.ndarray, z: np.ndarray, profile: FieldProfile) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ``(Bz, eta_tilde)`` along a sampled trajectory."""
    t = np.asarray(t, dtype=float)
    z = np.asarray(z, dtype=float)
    Bz = np.empty_like(t)
    eta_t = np.empty_like(t)
    for i in range(t.size):
        stage = stage_at(t[i], profile.tau1, profile.tau2)
        Bz[i], eta_t[i] = field_law(
            t[i], z[i], stage, profile.B0, profile.B1, profile.eta, profile.tau1, profile.tau2, profile.ramp_width
        )
    return Bz, eta_t
