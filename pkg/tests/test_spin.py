import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nanorotor_sgi import (
    ProjectionValidityError,
    RotorMechanicalState,
    ScenarioParams,
    build_h_spin,
    edh_rhs,
    feshbach_reduce,
    spin_potential,
    validate_omega0,
)
from nanorotor_sgi.spin import effective_hamiltonian_rotating

import oracles

P = ScenarioParams()
MU, D = P.mu_spin, P.D_zfs

fields = st.floats(1e-4, 1e-2)
angles = st.floats(0.0, math.pi)
phases = st.floats(0.0, 2 * math.pi)


@given(B=fields, theta=angles, gamma=phases, e=st.floats(0.0, 1.0))
def test_matrix_matches_spin_operator_construction(B, theta, gamma, e):
    p = P.replace(E_strain=e * D / 3)
    H = build_h_spin(B * math.cos(theta), B * math.sin(theta), gamma, p)
    ref = oracles.spin1_matrix(MU, D, p.E_strain, B * math.cos(theta), B * math.sin(theta), gamma)
    assert np.allclose(H.entries, ref, rtol=0, atol=1e-14 * D)
    assert H.is_hermitian()


def test_aligned_field_without_strain_gives_zeeman_diagonal():
    H = build_h_spin(1e-2, 0.0, 0.0, P).entries
    assert np.allclose(np.diag(H).real, [MU * 1e-2 + D / 3, -2 * D / 3, -MU * 1e-2 + D / 3], rtol=1e-14)
    assert np.count_nonzero(H - np.diag(np.diag(H))) == 0


def test_trace_is_zero():
    # the D/3 shift makes H traceless
    H = build_h_spin(3e-3, 4e-3, 0.4, P.replace(E_strain=1e-26)).entries
    assert abs(np.trace(H)) < 1e-12 * D


def test_reduction_of_aligned_field_is_exact():
    h2 = feshbach_reduce(build_h_spin(1e-2, 0.0, 0.0, P), P)
    assert h2.delta_plus == pytest.approx(MU * 1e-2)
    assert h2.delta_minus == pytest.approx(-MU * 1e-2)
    assert h2.W == 0
    assert h2.shift == pytest.approx(D / 3)


def test_reduction_closed_form_offdiagonal():
    Bperp, gamma, E = 4e-3, 0.3, 2e-27
    p = P.replace(E_strain=E)
    h2 = feshbach_reduce(build_h_spin(1e-3, Bperp, gamma, p), p)
    eps = E + MU**2 * Bperp**2 * np.exp(2j * gamma) / (2 * D)
    assert h2.W == pytest.approx(eps, rel=1e-12)
    assert h2.shift == pytest.approx(D / 3 + MU**2 * Bperp**2 / (2 * D), rel=1e-14)


@settings(max_examples=300)
@given(B=fields, theta=angles, gamma=phases)
def test_reduced_levels_match_dense_eigensolver(B, theta, gamma):
    # error measured against the Zeeman scale mu|B|
    h3 = build_h_spin(B * math.cos(theta), B * math.sin(theta), gamma, P)
    exact = np.sort(np.linalg.eigvalsh(oracles.spin1_matrix(MU, D, 0.0, B * math.cos(theta), B * math.sin(theta), gamma)))[1:]
    reduced = np.sort(feshbach_reduce(h3, P).eigvalsh())
    err = np.max(np.abs(reduced - exact)) / (MU * B)
    assert err < (MU * B / D) ** 2


def test_projection_validity_error():
    big = 0.2 * D / MU  # mu|B| = D/5
    with pytest.raises(ProjectionValidityError):
        feshbach_reduce(build_h_spin(big, 0.0, 0.0, P), P)


@given(B=st.floats(-1e-2, 1e-2), e=st.floats(0.0, 1.0))
def test_spin_potential_branches(B, e):
    E = e * D / 3
    up, down = spin_potential(B, E, P)
    assert up >= down
    assert up + down == pytest.approx(2 * D / 3, rel=1e-12)
    assert (up - down) / 2 == pytest.approx(math.hypot(MU * B, E), rel=1e-12, abs=1e-40)


def test_spin_potential_without_field_is_strain_split():
    up, down = spin_potential(0.0, 1e-26, P)
    assert up - down == pytest.approx(2e-26)


def test_rotating_frame_detuning():
    h = effective_hamiltonian_rotating(1e-2, 0.01, 2 * math.pi * 1e4, 0.0, P)
    hbar = P.constants.hbar
    assert h.delta_plus == pytest.approx(MU * 1e-2 * math.cos(0.01) - hbar * 2 * math.pi * 1e4)
    assert abs(h.W) == pytest.approx((MU * 1e-2 * math.sin(0.01)) ** 2 / (2 * D))


# Einstein-de Haas torques

G = P.geometry
component = st.one_of(st.just(0.0), st.floats(1e-3, 1.0), st.floats(-1.0, -1e-3))
vectors = st.lists(component, min_size=3, max_size=3).map(np.array)


def _free_top_step(L, h):
    inertia = np.array([G.I_perp, G.I_perp, G.I_3])

    def f(L):
        return np.cross(L, L / inertia)

    k1 = f(L)
    k2 = f(L + h / 2 * k1)
    k3 = f(L + h / 2 * k2)
    k4 = f(L + h * k3)
    return L + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def test_edh_reduces_to_euler_free_top():
    L = np.array([0.3, -0.2, 1.0]) * G.I_3 * 1e4
    st_ = RotorMechanicalState(S=np.zeros(3), L=L, B_body=np.zeros(3))
    dS, dL = edh_rhs(st_, G, P)
    w = L / np.array([G.I_perp, G.I_perp, G.I_3])
    # Euler: I dw1/dt = (I2 - I3) w2 w3 etc.
    expected = np.array([
        (G.I_perp - G.I_3) * w[1] * w[2],
        (G.I_3 - G.I_perp) * w[2] * w[0],
        0.0,
    ])
    assert np.allclose(dL, expected, rtol=1e-12, atol=1e-30)
    assert np.all(dS == 0)


@given(v=vectors)
def test_free_top_conserves_norm_and_energy(v):
    L0 = v * G.I_3 * 1e4
    inertia = np.array([G.I_perp, G.I_perp, G.I_3])
    st_ = RotorMechanicalState(S=np.zeros(3), L=L0, B_body=np.zeros(3))
    _, dL = edh_rhs(st_, G, P)
    # both invariants have zero time derivative
    assert abs(np.dot(L0, dL)) <= 1e-9 * (np.linalg.norm(L0) * np.linalg.norm(dL) + 1e-300)
    assert abs(np.dot(L0 / inertia, dL)) <= 1e-9 * (np.linalg.norm(L0 / inertia) * np.linalg.norm(dL) + 1e-300)
    L = L0.copy()
    h = 1e-7
    for _ in range(200):
        L = _free_top_step(L, h)
    assert np.dot(L, L) == pytest.approx(np.dot(L0, L0), rel=1e-9, abs=1e-90)
    assert np.sum(L**2 / inertia) == pytest.approx(np.sum(L0**2 / inertia), rel=1e-9, abs=1e-90)


@given(s=vectors, l=vectors, b=vectors)
@settings(max_examples=50)
def test_edh_matches_finite_difference_evolution(s, l, b):
    # forward-difference of a fine explicit evolution converges to the rhs at first order
    S = s
    L0 = l * G.I_3 * 1e4 + np.array([0, 0, G.I_3 * 1e4])
    B = b * 1e-2

    def rhs(L):
        return edh_rhs(RotorMechanicalState(S=S, L=L, B_body=B), G, P)[1]

    def evolve(h, substeps=64):
        L = L0.copy()
        dt = h / substeps
        for _ in range(substeps):
            k1 = rhs(L)
            k2 = rhs(L + dt / 2 * k1)
            k3 = rhs(L + dt / 2 * k2)
            k4 = rhs(L + dt * k3)
            L = L + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        return L

    d0 = rhs(L0)
    scale = np.linalg.norm(d0) + 1e-300
    errs = []
    for h in (4e-6, 2e-6):
        fd = (evolve(h) - L0) / h
        errs.append(np.linalg.norm(fd - d0) / scale)
    if errs[0] < 1e-9:
        return  # rhs is locally linear; nothing to resolve
    assert errs[1] < 0.6 * errs[0]
    assert errs[1] < 0.05


def test_zeeman_and_edh_torques():
    L = np.zeros(3)
    S = np.array([0.0, 0.0, 1.0])
    B = np.array([1e-2, 0.0, 0.0])
    _, dL = edh_rhs(RotorMechanicalState(S=S, L=L, B_body=B), G, P)
    assert np.allclose(dL, MU * np.cross(B, S))
    L = np.array([G.I_perp * 10.0, 0.0, 0.0])
    _, dL = edh_rhs(RotorMechanicalState(S=S, L=L, B_body=np.zeros(3)), G, P)
    assert np.allclose(dL, P.constants.hbar * np.cross(S, L / np.array([G.I_perp, G.I_perp, G.I_3])))


def test_unlocked_spin_precesses_about_field():
    S = np.array([1.0, 0.0, 0.0])
    B = np.array([0.0, 0.0, 1e-2])
    dS, _ = edh_rhs(RotorMechanicalState(S=S, L=np.zeros(3), B_body=B), G, P, locked=False)
    assert np.dot(dS, S) == pytest.approx(0.0, abs=1e-12)
    assert np.linalg.norm(dS) == pytest.approx(MU * 1e-2 / P.constants.hbar, rel=1e-12)


# omega0 window

def test_window_reference_passes():
    rep = validate_omega0(P)
    assert rep.passed
    assert rep.to_line().startswith("omega0_window: PASS r1=")
    I = G.I_perp
    assert rep.r1 == pytest.approx(P.omega0 / math.sqrt(MU * P.B0 / I))
    assert rep.r2 == pytest.approx(P.omega0 * P.constants.hbar / (MU * P.B0))


@pytest.mark.parametrize("omega0, failure", [(2 * math.pi * 10.0, "gyroscopic"), (2 * math.pi * 2e8, "majorana")])
def test_window_failures(omega0, failure):
    rep = validate_omega0(P.replace(omega0=omega0))
    assert not rep.passed
    assert failure in rep.failures
    assert "FAIL" in rep.to_line()


def test_window_rabi_ceiling():
    # a small zero-field splitting brings the Rabi resonance below the Majorana one
    p = P.replace(D_zfs=MU * P.B0 * 1.01, omega0=0.01 * MU * P.B0 / P.constants.hbar)
    rep = validate_omega0(p)
    assert rep.failures == ["rabi"]
    assert rep.r3 == pytest.approx(100 * rep.r2)
