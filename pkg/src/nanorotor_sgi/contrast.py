"""Libration amplitudes, arm mismatches and spin-contrast lower bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .dynamics import ArmPair
from .field import FieldProfile, field_track
from .units import CylinderGeometry, ScenarioParams


@dataclass(frozen=True)
class LibrationSummary:
    """Equilibrium tracks of the libration angle and the mismatch areas.

    ``sigma_A`` is the area between the two tracks before the flip and
    ``sigma_B`` the area after it, both counted positive when the tracks
    cross over at the flip as intended.
    """

    A_beta_0: float
    A_beta_closed_bound: float
    t: np.ndarray
    beta_bar_plus: np.ndarray
    beta_bar_minus: np.ndarray
    delta_beta_bar_flip: float
    sigma_A: float
    sigma_B: float
    Bz_flip: float
    Bz_closed: float


@dataclass(frozen=True)
class MismatchSet:
    delta_beta: float
    delta_alpha: float
    delta_gamma: float
    delta_alpha_sigma: Optional[float] = None

    def __post_init__(self):
        for name in ("delta_beta", "delta_alpha", "delta_gamma"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def symmetry_residual(self) -> float:
        """``|delta_alpha + delta_gamma| / |delta_alpha|`` (0 for perfect antisymmetry)."""
        if self.delta_alpha == 0.0:
            return 0.0 if self.delta_gamma == 0.0 else math.inf
        return abs(self.delta_alpha + self.delta_gamma) / abs(self.delta_alpha)


@dataclass(frozen=True)
class ContrastReport:
    C_zero: float
    C_thermal: float
    kappa0_abs: float
    kappa_closed_bound: float
    delta_X: float
    n_occ: float
    dp_alpha: float
    dp_gamma: float
    exponent_alpha: float
    exponent_gamma: float
    exponent_libration: float

    @property
    def C_lower(self) -> float:
        """The thermal bound; equal to ``C_zero`` when ``n_occ == 0``."""
        return self.C_thermal


def _inertia_factor(geometry: CylinderGeometry) -> float:
    return (geometry.I_perp / geometry.I_3) ** 2


def equilibrium_shift(Bz, s, params: ScenarioParams, geometry: CylinderGeometry):
    """``beta_bar - beta0 = (I/I3)^2 s mu Bz beta0 / (I omega0^2)``."""
    return _inertia_factor(geometry) * s * params.mu_spin * np.asarray(Bz) * params.beta0 / (
        geometry.I_perp * params.omega0**2
    )


def initial_amplitude(params: ScenarioParams, geometry: Optional[CylinderGeometry] = None) -> float:
    """Libration amplitude right after release, ``A_beta(0)``."""
    geometry = geometry or params.geometry
    return float(equilibrium_shift(params.B0, 1.0, params, geometry))


def delta_beta_bound(params: ScenarioParams, geometry: Optional[CylinderGeometry] = None) -> float:
    """Closing libration mismatch bound ``(I/I3)^2 8 mu B0 beta0 / (I omega0^2)``."""
    return 8.0 * initial_amplitude(params, geometry)


def libration_frequency(params: ScenarioParams, geometry: CylinderGeometry) -> float:
    return params.omega0 * geometry.inertia_ratio


def common_mode_track(t: np.ndarray, params: ScenarioParams) -> np.ndarray:
    """Spin-independent centre-of-mass height from the diamagnetic trap alone.

    Piecewise closed form: harmonic about ``Z0`` while the gradient is on,
    free flight during the hold stage. Used when no simulated pair is given.
    """
    t = np.asarray(t, dtype=float)
    Z0 = params.Z0
    k2 = -params.chi_rho / params.constants.mu0 * params.eta**2
    w = math.sqrt(k2) if k2 > 0 else 0.0

    def harmonic(tt, z0, v0):
        if w == 0.0:
            return z0 + v0 * tt, v0 + 0.0 * tt
        c, s = np.cos(w * tt), np.sin(w * tt)
        return Z0 + (z0 - Z0) * c + v0 / w * s, -(z0 - Z0) * w * s + v0 * c

    z1, v1 = harmonic(params.tau1, 0.0, 0.0)
    z2 = z1 + v1 * (params.tau2 - params.tau1)
    out = np.empty_like(t)
    a = t < params.tau1
    b = (t >= params.tau1) & (t <= params.tau2)
    c = t > params.tau2
    out[a] = harmonic(t[a], 0.0, 0.0)[0]
    out[b] = z1 + v1 * (t[b] - params.tau1)
    out[c] = harmonic(t[c] - params.tau2, z2, v1)[0]
    return out


def _trapezoid(y: np.ndarray, x: np.ndarray) -> float:
    if x.size < 2:
        return 0.0
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def _split_areas(t, diff, t_flip):
    """Integrate ``diff`` over [0, t_flip] and (t_flip, end], splitting the flip bin exactly."""
    diff = np.asarray(diff, dtype=float)
    pre = t <= t_flip
    post = t >= t_flip
    # Insert the flip instant using the left (pre) and right (post) limits.
    i = int(np.searchsorted(t, t_flip, side="right"))
    if 0 < i < t.size and t[i - 1] < t_flip:
        left = diff[i - 1]
        right = diff[i]
        ta = np.append(t[pre], t_flip)
        ya = np.append(diff[pre], left)
        tb = np.insert(t[post], 0, t_flip)
        yb = np.insert(diff[post], 0, right)
    else:
        ta, ya, tb, yb = t[pre], diff[pre], t[post], diff[post]
    return _trapezoid(ya, ta), _trapezoid(yb, tb)


def libration_summary(
    source: Union[ArmPair, ScenarioParams],
    params: Optional[ScenarioParams] = None,
    n_grid: int = 10001,
) -> LibrationSummary:
    """Equilibrium tracks and mismatch areas.

    From an :class:`ArmPair` the field is evaluated along each arm's own
    height and spin history. From bare parameters the common-mode height and
    the default ``(+1, -1)`` flip schedule are used instead.
    """
    if isinstance(source, ArmPair):
        params = params or source.params
        geometry = params.geometry
        profile = FieldProfile.from_params(params)
        # Quadratures use the dense grid when the pair carries one.
        arms = (source.plus, source.minus)
        if all(a.dense is not None for a in arms):
            arms = tuple(a.dense for a in arms)
        t = arms[0].t
        tracks = []
        for arm in arms:
            Bz, _ = field_track(t, arm.z, profile)
            tracks.append(params.beta0 + equilibrium_shift(Bz, arm.s, params, geometry))
        bar_p, bar_m = tracks
    else:
        params = source
        geometry = params.geometry
        profile = FieldProfile.from_params(params)
        t = np.linspace(0.0, params.t_closed, n_grid)
        z = common_mode_track(t, params)
        Bz, _ = field_track(t, z, profile)
        s = np.where(t <= params.t_flip, 1.0, -1.0)
        bar_p = params.beta0 + equilibrium_shift(Bz, s, params, geometry)
        bar_m = params.beta0 + equilibrium_shift(Bz, -s, params, geometry)

    A0 = initial_amplitude(params, geometry)
    if isinstance(source, ArmPair):
        z_mid = 0.5 * (arms[0].z + arms[1].z)
        z_flip, z_close = np.interp(params.t_flip, t, z_mid), z_mid[-1]
    else:
        z_flip, z_close = common_mode_track(np.array([params.t_flip, params.t_closed]), params)
    B_flip = abs(params.B0 - params.eta * z_flip)
    area_pre, area_post = _split_areas(t, bar_p - bar_m, params.t_flip)
    return LibrationSummary(
        A_beta_0=A0,
        A_beta_closed_bound=3.0 * A0,
        t=t,
        beta_bar_plus=np.asarray(bar_p),
        beta_bar_minus=np.asarray(bar_m),
        delta_beta_bar_flip=float(2.0 * equilibrium_shift(B_flip, 1.0, params, geometry)),
        sigma_A=area_pre,
        sigma_B=-area_post,
        Bz_flip=float(B_flip),
        Bz_closed=float(abs(params.B0 - params.eta * z_close)),
    )


def sigma_delta_alpha(summary: LibrationSummary, params: ScenarioParams, geometry: CylinderGeometry) -> float:
    """Area estimate ``(I3/I)(omega0/beta0)(Sigma_A - Sigma_B)``."""
    if params.beta0 == 0.0:
        return 0.0
    return geometry.inertia_ratio * params.omega0 / params.beta0 * (summary.sigma_A - summary.sigma_B)


def mismatches(pair: ArmPair, summary: Optional[LibrationSummary] = None) -> MismatchSet:
    """Endpoint mismatches read from the trajectories, with the area estimate attached."""
    params = pair.params
    if summary is None and params.omega0 > 0:
        summary = libration_summary(pair)
    est = sigma_delta_alpha(summary, params, params.geometry) if summary is not None else None
    return MismatchSet(
        delta_beta=float(pair.delta_beta[-1]),
        delta_alpha=float(pair.delta_alpha[-1]),
        delta_gamma=float(pair.delta_gamma[-1]),
        delta_alpha_sigma=est,
    )


def scale_mismatches(m: MismatchSet, omega_from: float, omega_to: float) -> MismatchSet:
    """Rescale mismatches with ``delta_beta ~ omega0^-2`` and ``delta_alpha, delta_gamma ~ omega0^-1``."""
    if omega_from <= 0 or omega_to <= 0:
        raise ValueError("omega values must be positive")
    r = omega_from / omega_to
    return MismatchSet(
        delta_beta=m.delta_beta * r * r,
        delta_alpha=m.delta_alpha * r,
        delta_gamma=m.delta_gamma * r,
        delta_alpha_sigma=None if m.delta_alpha_sigma is None else m.delta_alpha_sigma * r,
    )


def occupation_number(T_lib: float, omega0: float, params: Optional[ScenarioParams] = None) -> float:
    """Thermal occupation ``n = kB T / (hbar omega0)`` of the libration mode."""
    if T_lib < 0:
        raise ValueError(f"T_lib must be >= 0, got {T_lib}")
    if omega0 <= 0:
        raise ValueError("omega0 must be positive")
    c = (params or ScenarioParams()).constants
    return c.kB * T_lib / (c.hbar * omega0)


def kappa_magnitude(beta, beta_dot, beta_bar, params: ScenarioParams, geometry: CylinderGeometry):
    """Coherent-state displacement ``sqrt(I omega0 / 2 hbar) * A`` of the libration mode.

    ``A`` is the instantaneous amplitude about ``beta_bar``, with the phase
    quadrature scaled by the libration frequency ``omega0 I3/I``.
    """
    w = libration_frequency(params, geometry)
    amp = np.hypot(np.asarray(beta) - beta_bar, np.asarray(beta_dot) / w)
    return math.sqrt(geometry.I_perp * params.omega0 / (2.0 * params.constants.hbar)) * amp


def _resolve_dp(dp_alpha, dp_gamma, params: ScenarioParams):
    hbar = params.constants.hbar
    if dp_alpha is None or dp_alpha <= 0:
        raise ValueError("dp_alpha must be > 0 (in units of hbar)")
    if dp_gamma is None:
        dp_gamma = dp_alpha * math.cos(params.beta0)
    if dp_gamma <= 0:
        raise ValueError("dp_gamma must be > 0 (in units of hbar)")
    return dp_alpha * hbar, dp_gamma * hbar


def _report(mismatch, summary, dp_alpha, dp_gamma, n, params, geometry) -> ContrastReport:
    geometry = geometry or params.geometry
    hbar = params.constants.hbar
    dpa, dpg = _resolve_dp(dp_alpha, dp_gamma, params)
    I, w0 = geometry.I_perp, params.omega0
    if w0 <= 0:
        raise ValueError("contrast bound requires omega0 > 0")
    ea = mismatch.delta_alpha**2 * dpa**2 / (2.0 * hbar**2)
    eg = mismatch.delta_gamma**2 * dpg**2 / (2.0 * hbar**2)
    lib = (
        (I / geometry.I_3) ** 4 * 16.0 * (params.mu_spin * params.B0 * params.beta0) ** 2 / (hbar * I * w0**3)
    )
    A0 = summary.A_beta_0 if summary is not None else initial_amplitude(params, geometry)
    pref = math.sqrt(I * w0 / (2.0 * hbar))
    B_close = summary.Bz_closed if summary is not None else params.B0
    c0 = math.exp(-(ea + eg + lib))
    cth = math.exp(-(ea + eg + (1.0 + 2.0 * n) * lib))
    return ContrastReport(
        C_zero=c0,
        C_thermal=cth,
        kappa0_abs=pref * A0,
        kappa_closed_bound=pref * 3.0 * A0,
        delta_X=pref * float(2.0 * equilibrium_shift(B_close, 1.0, params, geometry)),
        n_occ=float(n),
        dp_alpha=dpa,
        dp_gamma=dpg,
        exponent_alpha=ea,
        exponent_gamma=eg,
        exponent_libration=lib,
    )


def contrast_zero_T(
    mismatch: MismatchSet,
    summary: Optional[LibrationSummary],
    dp_alpha: float,
    dp_gamma: Optional[float],
    params: ScenarioParams,
    geometry: Optional[CylinderGeometry] = None,
) -> ContrastReport:
    """Zero-temperature lower bound on the spin contrast.

    ``dp_alpha`` and ``dp_gamma`` are momentum spreads in units of hbar;
    ``dp_gamma`` defaults to ``dp_alpha cos(beta0)``.
    """
    return _report(mismatch, summary, dp_alpha, dp_gamma, 0.0, params, geometry)


def contrast_thermal(
    mismatch: MismatchSet,
    summary: Optional[LibrationSummary],
    dp_alpha: float,
    dp_gamma: Optional[float],
    params: ScenarioParams,
    geometry: Optional[CylinderGeometry] = None,
    n: Optional[float] = None,
    T_lib: Optional[float] = None,
) -> ContrastReport:
    """Thermal lower bound; give the occupation ``n`` or the libration temperature ``T_lib``."""
    if (n is None) == (T_lib is None):
        raise ValueError("give exactly one of n and T_lib")
    if n is None:
        n = occupation_number(T_lib, params.omega0, params)
    if not n >= 0:
        raise ValueError(f"occupation number must be >= 0, got {n}")
    return _report(mismatch, summary, dp_alpha, dp_gamma, n, params, geometry)


def amplitude_track(arm, params: ScenarioParams) -> np.ndarray:
    """Per-bin libration amplitude ``(beta_hi - beta_lo) / 2`` from the step envelope."""
    return 0.5 * (arm.beta_hi - arm.beta_lo)


def closed_kappa(pair: ArmPair, summary: LibrationSummary) -> tuple[float, float]:
    """``|kappa(t_closed)|`` of each arm from its final state."""
    params = pair.params
    geometry = params.geometry
    out = []
    for arm, bar in ((pair.plus, summary.beta_bar_plus), (pair.minus, summary.beta_bar_minus)):
        out.append(float(kappa_magnitude(arm.beta[-1], arm.beta_dot[-1], bar[-1], params, geometry)))
    return out[0], out[1]

