"""Compiled right-hand side and Runge-Kutta drivers for one interferometer arm.

State layout: ``[z, z_dot, beta, beta_dot, alpha, psi]`` with
``psi = gamma - omega0 * t``. The spin-axis rotation angle grows like
``omega0 * t`` (~1e5 rad over a run), so the slowly varying remainder is
integrated instead and gamma is rebuilt on output.
"""
import math

import numpy as np
from numba import njit

from .field import field_law

# Indices into the packed parameter vector.
MASS, MU, CHI_MU0, E_STRAIN, Z0, B0, B1, ETA, TAU1, TAU2, RAMP = range(11)
D_OFF, ALPHA_P, I_PERP, I_3, OMEGA0, BETA0, STRICT = range(11, 18)
N_PARAMS = 18

SIN_BETA_GUARD = 1e-6

OK, STEP_UNDERFLOW, CHART_EXIT, NON_FINITE, MAX_STEPS = 0, 1, 2, 3, 4


@njit(cache=True)
def z_accel(z, beta, s, Bz_eta_t, eta_t, P):
    """C.O.M. acceleration; spin term uses the strain-aware form when E > 0."""
    m = P[MASS]
    mu = P[MU]
    E = P[E_STRAIN]
    dz = z - P[Z0]
    cb = math.cos(beta)
    if E == 0.0:
        spin = -s * mu * eta_t * cb / m
    else:
        b_par = eta_t * dz * cb
        spin = -s * mu * mu * eta_t * b_par / (m * math.sqrt((mu * b_par) ** 2 + E * E))
    # chi_rho < 0: the diamagnetic term pulls towards the field zero at Z0.
    dia = P[CHI_MU0] * eta_t * eta_t * dz
    return spin + dia


@njit(cache=True)
def _cos_diff(beta0, beta):
    # cos(beta0) - cos(beta) without cancellation
    return 2.0 * math.sin(0.5 * (beta + beta0)) * math.sin(0.5 * (beta - beta0))


@njit(cache=True)
def _one_minus_cc(beta0, beta):
    # 1 - cos(beta0) cos(beta) without cancellation
    a = math.sin(0.5 * (beta - beta0))
    b = math.sin(0.5 * (beta + beta0))
    return a * a + b * b


@njit(cache=True)
def beta_rot_accel(beta, P):
    """Gyroscopic part of beta'' for p_alpha = I3 w0 cos(beta0), p_gamma = I3 w0."""
    w0 = P[OMEGA0]
    if w0 == 0.0:
        return 0.0
    k = P[I_3] / P[I_PERP]
    b0 = P[BETA0]
    sb = math.sin(beta)
    if sb < SIN_BETA_GUARD:
        return -w0 * w0 * k * k * (beta - b0)
    return -(w0 * w0 * k * k) * _cos_diff(b0, beta) * _one_minus_cc(b0, beta) / (sb * sb * sb)


@njit(cache=True)
def alpha_psi_rates(beta, P):
    """Return ``(alpha_dot, psi_dot)`` where ``psi_dot = gamma_dot - omega0``."""
    w0 = P[OMEGA0]
    if w0 == 0.0:
        return 0.0, 0.0
    k = P[I_3] / P[I_PERP]
    b0 = P[BETA0]
    sb = math.sin(beta)
    if sb < SIN_BETA_GUARD:
        ad = k * w0 * (beta - b0) / b0
    else:
        ad = k * w0 * _cos_diff(b0, beta) / (sb * sb)
    return ad, -math.cos(beta) * ad


@njit(cache=True)
def rhs(t, y, s, stage, P, out):
    Bz, eta_t = field_law(t, y[0], stage, P[B0], P[B1], P[ETA], P[TAU1], P[TAU2], P[RAMP])
    beta = y[2]
    out[0] = y[1]
    out[1] = z_accel(y[0], beta, s, Bz, eta_t, P)
    out[2] = y[3]
    B_zee = Bz
    if P[STRICT] != 0.0:
        B_zee = Bz + eta_t * P[D_OFF] * math.cos(beta + P[ALPHA_P])
    mu_I = s * P[MU] / P[I_PERP]
    out[3] = beta_rot_accel(beta, P) + mu_I * (B_zee * math.sin(beta) - P[D_OFF] * eta_t * math.sin(P[ALPHA_P]))
    ad, pd = alpha_psi_rates(beta, P)
    out[4] = ad
    out[5] = pd


# Dormand-Prince 5(4) tableau.
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = 9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0
B1_, B3_, B4_, B5_, B6_ = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
# Error coefficients (5th-order minus embedded 4th-order weights).
E1, E3, E4, E5, E6, E7 = 71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0


@njit(cache=True)
def _hermite(theta, h, y0, f0, y1, f1, out):
    t2 = theta * theta
    t3 = t2 * theta
    h00 = 2 * t3 - 3 * t2 + 1
    h10 = t3 - 2 * t2 + theta
    h01 = -2 * t3 + 3 * t2
    h11 = t3 - t2
    for i in range(y0.shape[0]):
        out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i]


@njit(cache=True)
def _emit(t_a, h, ya, fa, yb, fb, t_out, j, out_y, env_lo, env_hi, t_end, tmp):
    # Write every requested output time in (t_a, t_a + h]; returns the next index.
    n = t_out.shape[0]
    t_b = t_a + h
    while j < n and t_out[j] <= t_b and t_out[j] <= t_end:
        theta = (t_out[j] - t_a) / h
        if theta >= 1.0:
            for i in range(ya.shape[0]):
                tmp[i] = yb[i]
        else:
            _hermite(theta, h, ya, fa, yb, fb, tmp)
        for i in range(ya.shape[0]):
            out_y[j, i] = tmp[i]
        if tmp[2] < env_lo[j]:
            env_lo[j] = tmp[2]
        if tmp[2] > env_hi[j]:
            env_hi[j] = tmp[2]
        j += 1
    k = j if j < n else n - 1
    if yb[2] < env_lo[k]:
        env_lo[k] = yb[2]
    if yb[2] > env_hi[k]:
        env_hi[k] = yb[2]
    return j


@njit(cache=True)
def _check_state(y, chart):
    for i in range(y.shape[0]):
        if not math.isfinite(y[i]):
            return NON_FINITE
    if chart and (y[2] <= 0.0 or y[2] >= math.pi):
        return CHART_EXIT
    return OK


@njit(cache=True)
def _dp5_stages(t, h, y, s, stage, P, k1, k2, k3, k4, k5, k6, k7, ynew, tmp):
    # One Dormand-Prince step from (t, y) with k1 = f(t, y); fills ynew and k7 = f(t + h, ynew).
    n = y.shape[0]
    for i in range(n):
        tmp[i] = y[i] + h * A21 * k1[i]
    rhs(t + C2 * h, tmp, s, stage, P, k2)
    for i in range(n):
        tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
    rhs(t + C3 * h, tmp, s, stage, P, k3)
    for i in range(n):
        tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
    rhs(t + C4 * h, tmp, s, stage, P, k4)
    for i in range(n):
        tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
    rhs(t + C5 * h, tmp, s, stage, P, k5)
    for i in range(n):
        tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
    rhs(t + h, tmp, s, stage, P, k6)
    for i in range(n):
        ynew[i] = y[i] + h * (B1_ * k1[i] + B3_ * k3[i] + B4_ * k4[i] + B5_ * k5[i] + B6_ * k6[i])
    rhs(t + h, ynew, s, stage, P, k7)


@njit(cache=True)
def integrate_segment_adaptive(
    t0, t1, y0, s, stage, P, rtol, atol, h_init, max_steps, t_out, j0, out_y, env_lo, env_hi, stats
):
    """Dormand-Prince 5(4) from t0 to exactly t1.

    Writes dense output for ``t_out[j0:]`` inside (t0, t1] and returns
    ``(status, t_last, y_last, h_next, j_next)``. ``stats`` accumulates
    ``[accepted, rejected, rhs_evals, chart_substitutions]``.
    """
    n = y0.shape[0]
    y = y0.copy()
    ynew = np.empty(n)
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    tmp = np.empty(n)
    chart = P[OMEGA0] != 0.0
    t = t0
    j = j0
    rhs(t, y, s, stage, P, k1)
    stats[2] += 1
    span = t1 - t0
    h = min(h_init, span) if h_init > 0.0 else span * 1e-6
    h_min = 1e-14 * max(abs(t1), 1.0)
    steps = 0
    while t < t1:
        if steps >= max_steps:
            return MAX_STEPS, t, y, h, j
        last = False
        if t + h >= t1 - 1e-15 * abs(t1):
            h = t1 - t
            last = True
        _dp5_stages(t, h, y, s, stage, P, k1, k2, k3, k4, k5, k6, k7, ynew, tmp)
        stats[2] += 6
        err = 0.0
        for i in range(n):
            e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            err += (e / sc) ** 2
        err = math.sqrt(err / n)
        if not math.isfinite(err):
            err = 1e10
        if err <= 1.0:
            t_next = t1 if last else t + h
            j = _emit(t, t_next - t, y, k1, ynew, k7, t_out, j, out_y, env_lo, env_hi, t1, tmp)
            if chart and math.sin(ynew[2]) < SIN_BETA_GUARD:
                stats[3] += 1
            status = _check_state(ynew, chart)
            if status != OK:
                return status, t, y, h, j
            t = t_next
            for i in range(n):
                y[i] = ynew[i]
                k1[i] = k7[i]
            stats[0] += 1
            steps += 1
            fac = 0.9 * err ** (-0.2) if err > 0 else 5.0
            h = h * min(5.0, max(0.2, fac))
        else:
            stats[1] += 1
            h = h * max(0.2, 0.9 * err ** (-0.25))
            if h < h_min:
                return STEP_UNDERFLOW, t, y, h, j
    return OK, t, y, h, j


@njit(cache=True)
def integrate_segment_rk4(t0, t1, y0, s, stage, P, dt, t_out, j0, out_y, env_lo, env_hi, stats):
    """Classical fixed-step RK4 landing exactly on t1 (cross-check mode)."""
    n = y0.shape[0]
    y = y0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    f1 = np.empty(n)
    tmp = np.empty(n)
    ynew = np.empty(n)
    chart = P[OMEGA0] != 0.0
    nsteps = max(1, int(math.ceil((t1 - t0) / dt)))
    h = (t1 - t0) / nsteps
    j = j0
    rhs(t0, y, s, stage, P, k1)
    for step in range(nsteps):
        t = t0 + step * h
        for i in range(n):
            tmp[i] = y[i] + 0.5 * h * k1[i]
        rhs(t + 0.5 * h, tmp, s, stage, P, k2)
        for i in range(n):
            tmp[i] = y[i] + 0.5 * h * k2[i]
        rhs(t + 0.5 * h, tmp, s, stage, P, k3)
        for i in range(n):
            tmp[i] = y[i] + h * k3[i]
        rhs(t + h, tmp, s, stage, P, k4)
        for i in range(n):
            ynew[i] = y[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i])
        t_next = t1 if step == nsteps - 1 else t0 + (step + 1) * h
        rhs(t_next, ynew, s, stage, P, f1)
        stats[2] += 4
        j = _emit(t, t_next - t, y, k1, ynew, f1, t_out, j, out_y, env_lo, env_hi, t1, tmp)
        if chart and math.sin(ynew[2]) < SIN_BETA_GUARD:
            stats[3] += 1
        status = _check_state(ynew, chart)
        if status != OK:
            return status, t, y, h, j
        for i in range(n):
            y[i] = ynew[i]
            k1[i] = f1[i]
        stats[0] += 1
    return OK, t1, y, h, j


@njit(cache=True)
def integrate_segment_dp5_fixed(t0, t1, y0, s, stage, P, dt, t_out, j0, out_y, env_lo, env_hi, stats):
    """Dormand-Prince 5th-order weights at a fixed step, no error control."""
    n = y0.shape[0]
    y = y0.copy()
    ynew = np.empty(n)
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    tmp = np.empty(n)
    chart = P[OMEGA0] != 0.0
    nsteps = max(1, int(math.ceil((t1 - t0) / dt)))
    h = (t1 - t0) / nsteps
    j = j0
    rhs(t0, y, s, stage, P, k1)
    for step in range(nsteps):
        t = t0 + step * h
        t_next = t1 if step == nsteps - 1 else t0 + (step + 1) * h
        _dp5_stages(t, t_next - t, y, s, stage, P, k1, k2, k3, k4, k5, k6, k7, ynew, tmp)
        stats[2] += 6
        j = _emit(t, t_next - t, y, k1, ynew, k7, t_out, j, out_y, env_lo, env_hi, t1, tmp)
        if chart and math.sin(ynew[2]) < SIN_BETA_GUARD:
            stats[3] += 1
        status = _check_state(ynew, chart)
        if status != OK:
            return status, t, y, h, j
        for i in range(n):
            y[i] = ynew[i]
            k1[i] = k7[i]
        stats[0] += 1
    return OK, t1, y, h, j
