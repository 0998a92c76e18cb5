import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nanorotor_sgi import ScenarioParams
from nanorotor_sgi.contrast import (
    MismatchSet,
    closed_kappa,
    common_mode_track,
    contrast_thermal,
    contrast_zero_T,
    delta_beta_bound,
    initial_amplitude,
    kappa_magnitude,
    libration_summary,
    mismatches,
    occupation_number,
    scale_mismatches,
    _split_areas,
)

import oracles

P = ScenarioParams()
G = P.geometry
ZERO = MismatchSet(0.0, 0.0, 0.0)


def test_initial_amplitude_by_hand():
    _, I, I3 = oracles.cylinder(1e-17, 3500.0, 100e-9)
    mu = oracles.H * 2.8e10
    expected = (I / I3) ** 2 * mu * 1e-2 * 0.01 / (I * (2 * math.pi * 1e4) ** 2)
    assert initial_amplitude(P) == pytest.approx(expected, rel=1e-12)
    assert initial_amplitude(P) == pytest.approx(7.06e-6, rel=5e-3)
    assert delta_beta_bound(P) == pytest.approx(8 * expected, rel=1e-12)


def test_occupation_number():
    n = occupation_number(1e-4, 2 * math.pi * 8e4)
    assert n == pytest.approx(oracles.KB * 1e-4 / (oracles.HBAR * 2 * math.pi * 8e4), rel=1e-12)
    assert n == pytest.approx(26.0, abs=0.1)
    assert occupation_number(0.0, 1.0) == 0.0


@pytest.mark.parametrize("T, w", [(-1e-3, 1.0), (1.0, 0.0), (1.0, -5.0)])
def test_occupation_domain(T, w):
    with pytest.raises(ValueError):
        occupation_number(T, w)


def test_vanishing_field_and_zero_mismatch_gives_unit_contrast():
    p = P.replace(B0=1e-12, B1=1e-14)
    rep = contrast_thermal(ZERO, None, 10.0, None, p, n=100.0)
    assert rep.C_zero == pytest.approx(1.0, abs=1e-12)
    assert rep.C_thermal == pytest.approx(1.0, abs=1e-10)


def test_zero_occupation_thermal_equals_zero_temperature():
    m = MismatchSet(1e-3, 2e-2, -2e-2)
    a = contrast_zero_T(m, None, 5.0, None, P)
    b = contrast_thermal(m, None, 5.0, None, P, n=0.0)
    assert a.C_zero == b.C_thermal == b.C_lower


def test_exponents_by_hand():
    m = MismatchSet(0.0, 0.1, -0.08)
    rep = contrast_zero_T(m, None, 10.0, 7.0, P)
    assert rep.exponent_alpha == pytest.approx(0.1**2 * 10**2 / 2, rel=1e-12)
    assert rep.exponent_gamma == pytest.approx(0.08**2 * 7**2 / 2, rel=1e-12)
    lib = (G.I_perp / G.I_3) ** 4 * 16 * (P.mu_spin * P.B0 * P.beta0) ** 2 / (
        oracles.HBAR * G.I_perp * P.omega0**3
    )
    assert rep.exponent_libration == pytest.approx(lib, rel=1e-12)
    assert rep.C_zero == pytest.approx(math.exp(-(rep.exponent_alpha + rep.exponent_gamma + lib)), rel=1e-12)


def test_dp_gamma_defaults_to_projection():
    rep = contrast_zero_T(ZERO, None, 10.0, None, P)
    assert rep.dp_gamma == pytest.approx(10 * oracles.HBAR * math.cos(P.beta0), rel=1e-12)


@pytest.mark.parametrize("kw", [dict(), dict(n=1.0, T_lib=1.0), dict(n=-1.0)])
def test_thermal_domain(kw):
    with pytest.raises(ValueError):
        contrast_thermal(ZERO, None, 1.0, None, P, **kw)


def test_bad_dp_and_omega():
    with pytest.raises(ValueError):
        contrast_zero_T(ZERO, None, 0.0, None, P)
    with pytest.raises(ValueError):
        contrast_zero_T(ZERO, None, 1.0, None, P.replace(omega0=0.0, beta0=0.0))


def test_non_finite_mismatch_rejected():
    with pytest.raises(ValueError):
        MismatchSet(0.0, math.nan, 0.0)


small = st.floats(-0.5, 0.5)
dps = st.floats(0.1, 50.0)
occ = st.floats(0.0, 1e3)


@given(da=small, dg=small, dp=dps, n=occ)
def test_contrast_in_unit_interval(da, dg, dp, n):
    rep = contrast_thermal(MismatchSet(0.0, da, dg), None, dp, None, P, n=n)
    assert 0.0 <= rep.C_thermal <= rep.C_zero <= 1.0


@given(da=small, dg=small, dp=dps, extra=st.floats(0.01, 10.0), n=occ, dn=st.floats(0.1, 100.0))
def test_contrast_monotone(da, dg, dp, extra, n, dn):
    m = MismatchSet(0.0, da, dg)
    base = contrast_thermal(m, None, dp, None, P, n=n).C_thermal
    assert contrast_thermal(m, None, dp + extra, None, P, n=n).C_thermal <= base
    assert contrast_thermal(m, None, dp, None, P, n=n + dn).C_thermal <= base
    bigger = MismatchSet(0.0, da * (1 + extra), dg)
    assert contrast_thermal(bigger, None, dp, None, P, n=n).C_thermal <= base


@given(w=st.floats(1e3, 1e6), scale=st.floats(0.1, 10.0))
def test_scale_mismatches_roundtrip(w, scale):
    m = MismatchSet(1e-6, 0.2, -0.2, 0.19)
    s = scale_mismatches(m, w, w * scale)
    assert s.delta_beta == pytest.approx(m.delta_beta / scale**2, rel=1e-12)
    assert s.delta_alpha == pytest.approx(m.delta_alpha / scale, rel=1e-12)
    back = scale_mismatches(s, w * scale, w)
    assert back.delta_gamma == pytest.approx(m.delta_gamma, rel=1e-12)


def test_symmetry_residual():
    assert MismatchSet(0.0, 0.2, -0.2).symmetry_residual == 0.0
    assert MismatchSet(0.0, 0.2, -0.1).symmetry_residual == pytest.approx(0.5)


@given(c=st.floats(-1.0, 1.0), tf=st.floats(0.1, 0.9))
def test_split_areas_of_constant(c, tf):
    t = np.linspace(0.0, 1.0, 101)
    a, b = _split_areas(t, np.full_like(t, c), tf)
    assert a == pytest.approx(c * tf, abs=1e-12)
    assert b == pytest.approx(c * (1 - tf), abs=1e-12)


def test_split_areas_uses_one_sided_limits():
    t = np.linspace(0.0, 1.0, 11)
    diff = np.where(t <= 0.55, 1.0, -1.0)
    a, b = _split_areas(t, diff, 0.55)
    assert a == pytest.approx(0.55)
    assert b == pytest.approx(-0.45)


def test_common_mode_matches_spinless_oracle():
    t, arms = oracles.z_only_pair(P.mass, labels=((0, 0),), n=2001)
    z = common_mode_track(t, P)
    assert np.max(np.abs(z - arms[0][0])) < 1e-9 * np.max(np.abs(z))


def test_summary_from_params_is_antisymmetric():
    s = libration_summary(P)
    assert np.allclose(s.beta_bar_plus - P.beta0, -(s.beta_bar_minus - P.beta0), rtol=1e-12, atol=1e-20)
    assert s.sigma_A > 0 and s.sigma_B > 0
    assert s.A_beta_closed_bound == pytest.approx(3 * s.A_beta_0)


def test_summary_from_pair_close_to_common_mode(preset_pair):
    a = libration_summary(preset_pair)
    b = libration_summary(P)
    assert a.Bz_flip == pytest.approx(b.Bz_flip, rel=1e-2)
    assert a.delta_beta_bar_flip == pytest.approx(b.delta_beta_bar_flip, rel=1e-2)


def test_mismatch_from_pair(preset_pair):
    m = mismatches(preset_pair)
    assert m.delta_beta == preset_pair.delta_beta[-1]
    assert m.delta_alpha_sigma is not None and math.isfinite(m.delta_alpha_sigma)


def test_kappa_bounds(preset_pair):
    s = libration_summary(preset_pair)
    rep = contrast_zero_T(mismatches(preset_pair, s), s, 1.0, None, P)
    kp, km = closed_kappa(preset_pair, s)
    assert max(kp, km) <= rep.kappa_closed_bound
    assert rep.kappa0_abs == pytest.approx(
        math.sqrt(G.I_perp * P.omega0 / (2 * oracles.HBAR)) * initial_amplitude(P), rel=1e-12
    )


def test_kappa_at_release_equals_bound(preset):
    # at t = 0 the rotor sits at beta0 at rest, so |kappa| is the offset to the field equilibrium
    s = libration_summary(preset)
    k0 = kappa_magnitude(preset.beta0, 0.0, s.beta_bar_plus[0], preset, G)
    assert k0 == pytest.approx(contrast_zero_T(ZERO, s, 1.0, None, preset).kappa0_abs, rel=1e-9)
