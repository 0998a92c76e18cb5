"""Spin-1 defect Hamiltonian, reduction to the {|+1>, |-1>} doublet, and the
spin/angular-momentum torque equations.

Basis ordering is ``(|+1>, |0>, |-1>)`` everywhere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .units import CylinderGeometry, ScenarioParams

FESHBACH_MARGIN = 10.0
WINDOW_SAFETY = 10.0


class ProjectionValidityError(ValueError):
    """The zero-field splitting does not dominate the Zeeman/strain energies."""


@dataclass(frozen=True)
class SpinMatrix3:
    entries: np.ndarray

    def __post_init__(self):
        if self.entries.shape != (3, 3):
            raise ValueError("spin matrix must be 3x3")

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def is_hermitian(self, rtol: float = 1e-12) -> bool:
        scale = max(np.max(np.abs(self.entries)), 1e-300)
        return bool(np.max(np.abs(self.entries - self.entries.conj().T)) <= rtol * scale)


@dataclass(frozen=True)
class EffectiveSpin2:
    """2x2 Hamiltonian ``[[delta_plus, conj(W)], [W, delta_minus]] + shift * 1``."""

    delta_plus: float
    delta_minus: float
    W: complex
    shift: float

    @property
    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.delta_plus + self.shift, np.conj(self.W)], [self.W, self.delta_minus + self.shift]],
            dtype=complex,
        )

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


def build_h_spin(B_par: float, B_perp: float, gamma: float, params: ScenarioParams) -> SpinMatrix3:
    """Zeeman + zero-field-splitting Hamiltonian in the spin-1 basis, in joules."""
    mu = params.mu_spin
    D = params.D_zfs
    E = params.E_strain
    off = mu * B_perp / math.sqrt(2.0)
    em = np.exp(-1j * gamma)
    ep = np.exp(1j * gamma)
    H = np.array(
        [
            [mu * B_par, off * em, E],
            [off * ep, -D, off * em],
            [E, off * ep, -mu * B_par],
        ],
        dtype=complex,
    )
    return SpinMatrix3(H + D / 3.0 * np.eye(3))


def feshbach_reduce(h3: SpinMatrix3, params: ScenarioParams) -> EffectiveSpin2:
    """Eliminate |0> to second order: ``PHP + PHQ (E_ref - QHQ)^-1 QHP``.

    The reference energy is the doublet centre ``D/3``, so the denominator is
    exactly ``D`` and the result reproduces the closed form with
    ``eps = E + mu^2 B_perp^2 exp(2 i gamma) / (2 D)``.
    """
    H = h3.entries
    D = params.D_zfs
    zeeman_scale = max(abs(H[0, 0] - H[2, 2]) / 2.0, math.sqrt(2.0) * abs(H[0, 1]))
    if D <= FESHBACH_MARGIN * zeeman_scale:
        raise ProjectionValidityError(
            f"D = {D:.3e} J is not >> mu|B| = {zeeman_scale:.3e} J (need D > {FESHBACH_MARGIN:g} mu|B|)"
        )
    p_idx = [0, 2]
    PHP = H[np.ix_(p_idx, p_idx)]
    PHQ = H[np.ix_(p_idx, [1])]
    QHP = H[np.ix_([1], p_idx)]
    QHQ = H[1, 1].real
    e_ref = D / 3.0
    Heff = PHP + (PHQ @ QHP) / (e_ref - QHQ)
    shift = 0.5 * (Heff[0, 0] + Heff[1, 1]).real
    return EffectiveSpin2(
        delta_plus=float(Heff[0, 0].real - shift),
        delta_minus=float(Heff[1, 1].real - shift),
        W=complex(Heff[1, 0]),
        shift=float(shift),
    )


def effective_hamiltonian_rotating(Bz: float, beta0: float, omega0: float, t: float, params: ScenarioParams) -> EffectiveSpin2:
    """Doublet Hamiltonian in the frame co-rotating at ``omega0``.

    ``delta_pm = +-(mu Bz cos beta0 - hbar omega0)`` and
    ``W = mu^2 Bz^2 sin^2 beta0 exp(2 i omega0 t) / (2 D)``.
    """
    mu = params.mu_spin
    hbar = params.constants.hbar
    dp = mu * Bz * math.cos(beta0) - hbar * omega0
    W = (mu * Bz * math.sin(beta0)) ** 2 / (2.0 * params.D_zfs) * np.exp(2j * omega0 * t)
    return EffectiveSpin2(delta_plus=dp, delta_minus=-dp, W=complex(W), shift=params.D_zfs / 3.0)


def spin_potential(B_par: float, E_strain: float, params: ScenarioParams) -> tuple[float, float]:
    """Branch energies ``D/3 +- sqrt((mu B_par)^2 + E^2)``.

    The ``mu^2 B_perp^2 / 2D`` correction and the phase of the off-diagonal
    term are dropped; only ``|eps|`` enters.
    """
    root = math.hypot(params.mu_spin * B_par, E_strain)
    c = params.D_zfs / 3.0
    return c + root, c - root


@dataclass(frozen=True)
class RotorMechanicalState:
    """Body-frame spin direction ``S``, angular momentum ``L`` and field ``B_body``."""

    S: np.ndarray
    L: np.ndarray
    B_body: np.ndarray


def edh_rhs(
    state: RotorMechanicalState, geometry: CylinderGeometry, params: ScenarioParams, locked: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """Body-frame ``(dS/dt, dL/dt)``.

    ``dL_i/dt = eps_ijk (mu B_j S_k + hbar S_j L_k / I_k + L_j L_k / I_k)``:
    Zeeman torque, Einstein-de Haas coupling and the free-top term.

    With ``locked=True`` the spin stays fixed to the crystal axis, so its
    body-frame components are constant and the zero-field-splitting
    constraint absorbs the precession. ``locked=False`` returns the bare
    precession ``eps_ijk (mu S_j B_k / hbar + S_j L_k / I_k)``. The imaginary
    ``Gamma = sum_k hbar / 2 I_k`` (~1e-12 Hz) correction to the axis
    evolution is omitted.
    """
    S = np.asarray(state.S, dtype=float)
    L = np.asarray(state.L, dtype=float)
    B = np.asarray(state.B_body, dtype=float)
    inertia = np.array([geometry.I_perp, geometry.I_perp, geometry.I_3])
    omega = L / inertia
    mu = params.mu_spin
    hbar = params.constants.hbar
    dL = mu * np.cross(B, S) + hbar * np.cross(S, omega) + np.cross(L, omega)
    if locked:
        dS = np.zeros(3)
    else:
        dS = mu / hbar * np.cross(S, B) + np.cross(S, omega)
    return dS, dL


@dataclass(frozen=True)
class WindowReport:
    """Ratios locating omega0 between the gyroscopic floor and the spin-flip ceilings.

    ``r1 = omega0 / sqrt(mu B0 / I)`` (needs >= 10),
    ``r2 = hbar omega0 / (mu B0)`` (Majorana, needs <= 0.1),
    ``r3 = hbar omega0 / (D - mu B0)`` (Rabi, needs <= 0.1).
    """

    r1: float
    r2: float
    r3: float
    safety: float = WINDOW_SAFETY

    @property
    def gyroscopic_ok(self) -> bool:
        return self.r1 >= self.safety

    @property
    def majorana_ok(self) -> bool:
        return self.r2 <= 1.0 / self.safety

    @property
    def rabi_ok(self) -> bool:
        return self.r3 <= 1.0 / self.safety

    @property
    def passed(self) -> bool:
        return self.gyroscopic_ok and self.majorana_ok and self.rabi_ok

    @property
    def failures(self) -> list[str]:
        out = []
        if not self.gyroscopic_ok:
            out.append("gyroscopic")
        if not self.majorana_ok:
            out.append("majorana")
        if not self.rabi_ok:
            out.append("rabi")
        return out

    def to_line(self) -> str:
        status = "PASS" if self.passed else "FAIL(" + ",".join(self.failures) + ")"
        return f"omega0_window: {status} r1={self.r1:.6g} r2={self.r2:.6g} r3={self.r3:.6g}"


def validate_omega0(params: ScenarioParams, geometry: CylinderGeometry | None = None) -> WindowReport:
    geometry = geometry or params.geometry
    mu_B0 = params.mu_spin * params.B0
    hbar = params.constants.hbar
    w0 = params.omega0
    r1 = w0 / math.sqrt(mu_B0 / geometry.I_perp)
    r2 = w0 * hbar / mu_B0
    gap = params.D_zfs - mu_B0
    r3 = w0 * hbar / gap if gap > 0 else math.inf
    return WindowReport(r1=r1, r2=r2, r3=r3)
