"""Coupled centre-of-mass and Euler-angle dynamics for each interferometer arm.

Each arm carries a spin label ``s``. The label is swapped once, at
``t_flip``, by an instantaneous microwave pulse. Integration is split at
``tau1``, ``tau2`` and ``t_flip`` so that no step straddles a discontinuity
of the field law or the label.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels as K
from .field import HOLD, RECOMBINE, SPLIT, STAGE_NAMES, FieldProfile, FieldSample, field_track, stage_at
from .spin import WindowReport, validate_omega0
from .units import CylinderGeometry, ScenarioParams


class IntegrationError(RuntimeError):
    """Integration aborted; ``last_state`` is the last accepted state."""

    def __init__(self, message: str, last_state: Optional["RotorState"] = None, status: int = -1):
        super().__init__(message)
        self.last_state = last_state
        self.status = status


class ChartError(IntegrationError):
    """Libration angle left the (0, pi) coordinate chart."""


_STATUS_TEXT = {
    K.STEP_UNDERFLOW: "step size underflow",
    K.CHART_EXIT: "libration angle left the (0, pi) chart",
    K.NON_FINITE: "non-finite state",
    K.MAX_STEPS: "maximum number of steps exceeded",
}


@dataclass(frozen=True)
class RotorState:
    t: float
    z: float
    z_dot: float
    beta: float
    beta_dot: float
    alpha: float
    gamma: float
    s_label: int


@dataclass(frozen=True)
class ConservedMomenta:
    p_alpha: float
    p_gamma: float

    @classmethod
    def from_params(cls, params: ScenarioParams, geometry: Optional[CylinderGeometry] = None) -> "ConservedMomenta":
        g = geometry or params.geometry
        return cls(p_alpha=g.I_3 * params.omega0 * math.cos(params.beta0), p_gamma=g.I_3 * params.omega0)


@dataclass(frozen=True)
class IntegratorOptions:
    """Integrator settings.

    ``fixed_step`` switches to a fixed step of one ``steps_per_period``-th of
    the fast libration period, using the Dormand-Prince 5th-order weights
    (``fixed_method="dp5"``) or classical RK4 (``"rk4"``). ``dense`` additionally keeps a fine output grid of
    ``n_dense`` samples (rounded so the coarse grid is a subset of it).
    """

    rtol: float = 1e-9
    atol: float = 1e-12
    n_output: int = 10_001
    dense: bool = False
    n_dense: int = 1_000_001
    fixed_step: bool = False
    fixed_method: str = "dp5"
    steps_per_period: int = 50
    strict_bnv: bool = False
    max_steps: int = 200_000_000

    def __post_init__(self):
        if self.fixed_method not in ("dp5", "rk4"):
            raise ValueError("fixed_method must be 'dp5' or 'rk4'")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be positive")
        if self.n_output < 2 or self.n_dense < self.n_output:
            raise ValueError("need n_output >= 2 and n_dense >= n_output")
        if self.steps_per_period < 4:
            raise ValueError("steps_per_period must be >= 4")


def pack_params(params: ScenarioParams, geometry: CylinderGeometry, strict_bnv: bool = False) -> np.ndarray:
    P = np.zeros(K.N_PARAMS)
    P[K.MASS] = params.mass
    P[K.MU] = params.mu_spin
    P[K.CHI_MU0] = params.chi_rho / params.constants.mu0
    P[K.E_STRAIN] = params.E_strain
    P[K.Z0] = params.Z0
    P[K.B0] = params.B0
    P[K.B1] = params.B1
    P[K.ETA] = params.eta
    P[K.TAU1] = params.tau1
    P[K.TAU2] = params.tau2
    P[K.RAMP] = params.ramp_width
    P[K.D_OFF] = params.d_off
    P[K.ALPHA_P] = params.alpha_prime
    P[K.I_PERP] = geometry.I_perp
    P[K.I_3] = geometry.I_3
    P[K.OMEGA0] = params.omega0
    P[K.BETA0] = params.beta0
    P[K.STRICT] = 1.0 if strict_bnv else 0.0
    return P


def fast_frequency(params: ScenarioParams, geometry: CylinderGeometry) -> float:
    """Fastest angular frequency the integrator has to resolve."""
    lib = math.sqrt(params.mu_spin * max(abs(params.B0), abs(params.B1)) / geometry.I_perp)
    return max(params.omega0 * geometry.I_3 / geometry.I_perp, lib)


# ---------------------------------------------------------------------------
# Right-hand sides at the level of named quantities
# ---------------------------------------------------------------------------


def z_rhs(state: RotorState, sample: FieldSample, params: ScenarioParams) -> float:
    """C.O.M. acceleration for the arm's spin label in the sampled field."""
    P = pack_params(params, params.geometry)
    return float(K.z_accel(state.z, state.beta, float(state.s_label), sample.Bz, sample.eta_tilde, P))


def _check_chart(beta: float) -> None:
    if not 0.0 < beta < math.pi:
        raise ChartError(f"beta = {beta!r} outside (0, pi)")


def beta_rhs_full(
    state: RotorState,
    momenta: ConservedMomenta,
    B_nv: float,
    geometry: CylinderGeometry,
    params: ScenarioParams,
    dBz_dz: float = 0.0,
) -> float:
    """Full nonlinear libration acceleration.

    Gyroscopic term from the conserved momenta, Zeeman torque from ``B_nv`` and
    the off-centre gradient torque ``-(s mu / I) d dBz/dz sin(alpha')``.
    """
    beta = state.beta
    I = geometry.I_perp
    s = state.s_label
    zeeman = s * params.mu_spin / I * (B_nv * math.sin(beta) - params.d_off * dBz_dz * math.sin(params.alpha_prime))
    if momenta.p_alpha == 0.0 and momenta.p_gamma == 0.0:
        return zeeman
    _check_chart(beta)
    sb = math.sin(beta)
    cb = math.cos(beta)
    if sb < K.SIN_BETA_GUARD:
        w2 = (momenta.p_gamma / I) ** 2
        return -w2 * (beta - params.beta0) + zeeman
    pa, pg = momenta.p_alpha, momenta.p_gamma
    return (pa - pg * cb) * (pa * cb - pg) / (I * I * sb**3) + zeeman


def alpha_gamma_rhs(state: RotorState, momenta: ConservedMomenta, geometry: CylinderGeometry) -> tuple[float, float]:
    """Precession and spin-axis rotation rates ``(alpha_dot, gamma_dot)``."""
    if momenta.p_alpha == 0.0 and momenta.p_gamma == 0.0:
        return 0.0, 0.0
    _check_chart(state.beta)
    sb = math.sin(state.beta)
    cb = math.cos(state.beta)
    alpha_dot = (momenta.p_alpha - momenta.p_gamma * cb) / (geometry.I_perp * sb * sb)
    gamma_dot = momenta.p_gamma / geometry.I_3 - alpha_dot * cb
    return alpha_dot, gamma_dot


def canonical_momenta(beta, alpha_dot, gamma_dot, geometry: CylinderGeometry):
    """``(p_alpha, p_gamma)`` from Euler-angle velocities (vectorised)."""
    beta = np.asarray(beta)
    p_gamma = geometry.I_3 * (np.asarray(alpha_dot) * np.cos(beta) + gamma_dot)
    p_alpha = geometry.I_perp * alpha_dot * np.sin(beta) ** 2 + p_gamma * np.cos(beta)
    return p_alpha, p_gamma


def rotor_hamiltonian(beta, beta_dot, B_zeeman, s, params: ScenarioParams, geometry: CylinderGeometry):
    """Rotational energy plus spin Zeeman energy ``s mu B cos(beta)`` (vectorised)."""
    beta = np.asarray(beta, dtype=float)
    I, I3 = geometry.I_perp, geometry.I_3
    p_gamma = I3 * params.omega0
    # p_alpha - p_gamma cos(beta), written without cancellation
    diff = p_gamma * 2.0 * np.sin(0.5 * (beta + params.beta0)) * np.sin(0.5 * (beta - params.beta0))
    with np.errstate(divide="ignore", invalid="ignore"):
        gyro = np.where(diff == 0.0, 0.0, diff**2 / (2 * I * np.sin(beta) ** 2))
    return (
        0.5 * I * np.asarray(beta_dot) ** 2
        + p_gamma**2 / (2 * I3)
        + gyro
        + np.asarray(s) * params.mu_spin * np.asarray(B_zeeman) * np.cos(beta)
    )


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------


@dataclass
class ArmTrajectory:
    """Time-sampled arm on a uniform grid.

    ``y`` columns are ``z, z_dot, beta, beta_dot, alpha, gamma``.
    ``beta_lo``/``beta_hi`` bound beta over each output interval (built from
    every accepted integrator step), so oscillation envelopes survive the
    coarse sampling of a ~10^4-period libration.
    """

    t: np.ndarray
    y: np.ndarray
    s: np.ndarray
    stage: np.ndarray
    beta_lo: np.ndarray
    beta_hi: np.ndarray
    s_initial: int
    s_final: int
    events: dict
    params_hash: str
    stats: dict
    window: Optional[WindowReport] = None
    dense: Optional["ArmTrajectory"] = None
    params: Optional[ScenarioParams] = None

    @property
    def z(self):
        return self.y[:, 0]

    @property
    def z_dot(self):
        return self.y[:, 1]

    @property
    def beta(self):
        return self.y[:, 2]

    @property
    def beta_dot(self):
        return self.y[:, 3]

    @property
    def alpha(self):
        return self.y[:, 4]

    @property
    def gamma(self):
        return self.y[:, 5]

    @property
    def final(self) -> RotorState:
        return self.state(len(self.t) - 1)

    def state(self, i: int) -> RotorState:
        row = self.y[i]
        return RotorState(float(self.t[i]), *map(float, row), int(self.s[i]))

    @property
    def samples(self) -> list[RotorState]:
        return [self.state(i) for i in range(len(self.t))]


@dataclass
class ArmPair:
    plus: ArmTrajectory
    minus: ArmTrajectory

    def __post_init__(self):
        if self.plus.t.shape != self.minus.t.shape or not np.array_equal(self.plus.t, self.minus.t):
            raise ValueError("arms must share one time grid")

    @property
    def t(self):
        return self.plus.t

    @property
    def params(self) -> ScenarioParams:
        return self.plus.params

    @property
    def labels(self) -> tuple[int, int]:
        return self.plus.s_initial, self.minus.s_initial

    @property
    def delta_z(self):
        return self.plus.z - self.minus.z

    @property
    def delta_z_dot(self):
        return self.plus.z_dot - self.minus.z_dot

    @property
    def delta_beta(self):
        return self.plus.beta - self.minus.beta

    @property
    def delta_alpha(self):
        return self.plus.alpha - self.minus.alpha

    @property
    def delta_gamma(self):
        return self.plus.gamma - self.minus.gamma

    @property
    def max_separation(self) -> float:
        return float(np.max(np.abs(self.delta_z)))


def default_flip(s: int) -> int:
    return -s


def _segments(params: ScenarioParams, s: int, s_after: int):
    return [
        (0.0, params.tau1, SPLIT, s),
        (params.tau1, params.tau2, HOLD, s),
        (params.tau2, params.t_flip, RECOMBINE, s),
        (params.t_flip, params.t_closed, RECOMBINE, s_after),
    ]


def _bin_envelope(lo, hi, stride):
    # Collapse a dense envelope onto the coarse grid (bin i covers (t[i-1], t[i]]).
    n_coarse = (lo.size - 1) // stride + 1
    out_lo = np.empty(n_coarse)
    out_hi = np.empty(n_coarse)
    out_lo[0], out_hi[0] = lo[0], hi[0]
    blo = lo[1:].reshape(n_coarse - 1, stride)
    bhi = hi[1:].reshape(n_coarse - 1, stride)
    out_lo[1:] = blo.min(axis=1)
    out_hi[1:] = bhi.max(axis=1)
    return out_lo, out_hi


def integrate_arm(
    s_label: int,
    params: ScenarioParams,
    profile: Optional[FieldProfile] = None,
    options: Optional[IntegratorOptions] = None,
    s_after: Optional[int] = None,
) -> ArmTrajectory:
    """Integrate one arm over ``[0, t_closed]``.

    Initial state: ``z = z_dot = 0``, ``beta = beta0``, ``beta_dot = 0`` and
    ``alpha = gamma = 0``. At ``t_flip`` the label becomes ``s_after``
    (default ``-s_label``) and integration restarts from the same state.
    """
    options = options or IntegratorOptions()
    profile = profile or FieldProfile.from_params(params)
    if s_label not in (-1, 0, 1):
        raise ValueError(f"spin label must be -1, 0 or +1, got {s_label!r}")
    s_after = default_flip(s_label) if s_after is None else s_after
    geometry = params.geometry
    window = validate_omega0(params, geometry)
    P = pack_params(params, geometry, options.strict_bnv)

    n_out = int(options.n_output)
    if n_out < 2:
        raise ValueError("n_output must be >= 2")
    if options.dense:
        stride = max(1, int(math.ceil((options.n_dense - 1) / (n_out - 1))))
        n_grid = stride * (n_out - 1) + 1
    else:
        stride = 1
        n_grid = n_out
    t_grid = np.linspace(0.0, params.t_closed, n_grid)

    y0 = np.array([0.0, 0.0, params.beta0, 0.0, 0.0, 0.0])
    out = np.empty((n_grid, 6))
    out[0] = y0
    env_lo = np.full(n_grid, np.inf)
    env_hi = np.full(n_grid, -np.inf)
    env_lo[0] = env_hi[0] = params.beta0
    stats = np.zeros(4, dtype=np.int64)

    omega_fast = fast_frequency(params, geometry)
    dt_fixed = 2 * math.pi / (options.steps_per_period * omega_fast)
    h = dt_fixed
    y = y0
    j = 1
    wall = time.perf_counter()
    for t0, t1, stage, s in _segments(params, s_label, s_after):
        if options.fixed_step:
            stepper = K.integrate_segment_rk4 if options.fixed_method == "rk4" else K.integrate_segment_dp5_fixed
            status, t_last, y_last, h, j = stepper(
                t0, t1, y, float(s), stage, P, dt_fixed, t_grid, j, out, env_lo, env_hi, stats
            )
        else:
            status, t_last, y_last, h, j = K.integrate_segment_adaptive(
                t0, t1, y, float(s), stage, P, options.rtol, options.atol, h,
                options.max_steps, t_grid, j, out, env_lo, env_hi, stats,
            )
        if status != K.OK:
            last = RotorState(
                float(t_last), y_last[0], y_last[1], y_last[2], y_last[3], y_last[4],
                y_last[5] + params.omega0 * t_last, int(s),
            )
            cls = ChartError if status == K.CHART_EXIT else IntegrationError
            raise cls(f"{_STATUS_TEXT[status]} at t = {t_last:.6g} s (s = {s:+d})", last_state=last, status=status)
        y = y_last
    if j != n_grid:
        raise IntegrationError(f"output grid incomplete ({j} of {n_grid} samples)")

    out[:, 5] += params.omega0 * t_grid
    # The last interval's envelope must include the final sample.
    env_lo = np.minimum(env_lo, out[:, 2])
    env_hi = np.maximum(env_hi, out[:, 2])
    labels = np.where(t_grid < params.t_flip, s_label, s_after).astype(int)
    stages = np.array([stage_at(t, params.tau1, params.tau2) for t in t_grid], dtype=np.int8)
    stats_d = {
        "accepted_steps": int(stats[0]),
        "rejected_steps": int(stats[1]),
        "rhs_evaluations": int(stats[2]),
        "chart_substitutions": int(stats[3]),
        "wall_time_s": time.perf_counter() - wall,
        "method": f"{options.fixed_method}-fixed" if options.fixed_step else "dopri5-adaptive",
        "dt_fixed": dt_fixed if options.fixed_step else None,
    }
    events = {"t_flip": params.t_flip, "s_before": s_label, "s_after": s_after, "tau1": params.tau1, "tau2": params.tau2}

    def make(idx, lo, hi, dense=None):
        return ArmTrajectory(
            t=t_grid[idx], y=out[idx], s=labels[idx], stage=stages[idx], beta_lo=lo, beta_hi=hi,
            s_initial=s_label, s_final=s_after, events=events, params_hash=params.digest(),
            stats=stats_d, window=window, dense=dense, params=params,
        )

    if stride == 1:
        return make(slice(None), env_lo, env_hi)
    dense_traj = make(slice(None), env_lo, env_hi)
    lo_c, hi_c = _bin_envelope(env_lo, env_hi, stride)
    return make(slice(None, None, stride), lo_c, hi_c, dense=dense_traj)


def default_labels(params: ScenarioParams) -> tuple[tuple[int, int], tuple[int, int]]:
    """Initial labels and their post-flip values for the two arms.

    Without initial rotation the |+1> state is unstable, so the pair switches
    to {0, -1} and the flip exchanges those two labels.
    """
    if params.omega0 == 0.0:
        return (0, -1), (-1, 0)
    return (1, -1), (-1, 1)


def run_pair(
    params: ScenarioParams,
    profile: Optional[FieldProfile] = None,
    options: Optional[IntegratorOptions] = None,
    labels: Optional[Sequence[int]] = None,
) -> ArmPair:
    """Integrate both arms on a shared grid.

    ``labels`` overrides the initial spin labels, e.g. ``(1, -1)`` with
    ``omega0 = 0``; the flip then negates each label.
    """
    if labels is None:
        (sa, sb), (fa, fb) = default_labels(params)
    else:
        sa, sb = labels
        if params.omega0 == 0.0 and set(labels) == {0, -1}:
            fa, fb = sb, sa
        else:
            fa, fb = -sa, -sb
    plus = integrate_arm(sa, params, profile, options, s_after=fa)
    minus = integrate_arm(sb, params, profile, options, s_after=fb)
    return ArmPair(plus, minus)


def hold_stage_energy_drift(arm: ArmTrajectory, params: ScenarioParams) -> float:
    """Spread of the rotor Hamiltonian over the hold stage.

    Normalised by the energy that can move between terms: the largest
    libration kinetic, Zeeman and gyroscopic contributions added together.
    The constant ``p_gamma^2 / 2 I3`` is left out of both.
    """
    geometry = params.geometry
    src = arm.dense if arm.dense is not None else arm
    mask = (src.t >= params.tau1) & (src.t <= params.tau2)
    beta, beta_dot, s = src.beta[mask], src.beta_dot[mask], src.s[mask]
    const = geometry.I_3 * params.omega0**2 / 2
    H = rotor_hamiltonian(beta, beta_dot, params.B1, s, params, geometry) - const
    kinetic = 0.5 * geometry.I_perp * beta_dot**2
    zeeman = s * params.mu_spin * params.B1 * np.cos(beta)
    gyro = H - kinetic - zeeman
    scale = np.max(kinetic) + np.max(np.abs(zeeman)) + np.max(np.abs(gyro))
    return float(np.ptp(H) / max(scale, 1e-300))


def momentum_drift(arm: ArmTrajectory, params: ScenarioParams) -> tuple[float, float]:
    """Max relative deviation of ``(p_alpha, p_gamma)`` recomputed along the arm."""
    if params.omega0 == 0.0:
        return 0.0, 0.0
    geometry = params.geometry
    P = pack_params(params, geometry)
    beta = arm.beta
    ad = np.empty_like(beta)
    gd = np.empty_like(beta)
    for i, b in enumerate(beta):
        a_dot, psi_dot = K.alpha_psi_rates(b, P)
        ad[i] = a_dot
        gd[i] = psi_dot + params.omega0
    pa, pg = canonical_momenta(beta, ad, gd, geometry)
    ref = ConservedMomenta.from_params(params, geometry)
    return (
        float(np.max(np.abs(pa - ref.p_alpha)) / abs(ref.p_alpha)),
        float(np.max(np.abs(pg - ref.p_gamma)) / abs(ref.p_gamma)),
    )


def field_along(arm: ArmTrajectory, params: ScenarioParams) -> tuple[np.ndarray, np.ndarray]:
    return field_track(arm.t, arm.z, FieldProfile.from_params(params))
