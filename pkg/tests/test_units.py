import math

import pytest
from hypothesis import given, strategies as st

from nanorotor_sgi import ConfigError, ScenarioParams, build_geometry, classify_shape, radius_from_mass
from nanorotor_sgi.units import CONSTANTS, cylinder_inertia

import oracles


def test_reference_radius_and_inertia():
    # 1e-17 kg at 100 nm height: R = sqrt(m / (rho pi L)).
    g = build_geometry(1e-17, 3.5e3, L_height=100e-9)
    r, I, I3 = oracles.cylinder(1e-17, 3.5e3, 100e-9)
    assert g.radius == pytest.approx(r, rel=1e-14)
    assert g.radius == pytest.approx(95.4e-9, rel=2e-3)
    assert g.I_perp == pytest.approx(I, rel=1e-14)
    assert g.I_3 == pytest.approx(I3, rel=1e-14)


def test_radius_range_over_mass_ladder():
    assert radius_from_mass(5e-18, 3.5e3, 100e-9) == pytest.approx(67.4e-9, rel=2e-3)
    assert radius_from_mass(1e-16, 3.5e3, 100e-9) == pytest.approx(301.6e-9, rel=2e-3)


@pytest.mark.parametrize("bad", [0.0, -1e-17, math.inf, math.nan])
def test_radius_rejects_nonpositive_mass(bad):
    with pytest.raises(ValueError):
        radius_from_mass(bad, 3.5e3, 100e-9)


def test_frequency_inputs_are_multiplied_by_h():
    p = ScenarioParams.from_frequencies(D_hz=2.87e9, E_hz=1e6, mu_hz_per_T=2.8e10)
    assert p.D_zfs == pytest.approx(CONSTANTS.h * 2.87e9, rel=1e-15)
    assert p.E_strain == pytest.approx(CONSTANTS.h * 1e6, rel=1e-15)
    assert p.mu_spin == pytest.approx(1.855e-23, rel=1e-3)


def test_strain_bound_names_key():
    p = ScenarioParams()
    with pytest.raises(ConfigError) as exc:
        p.replace(E_strain=p.D_zfs / 3 * 1.01)
    assert exc.value.key == "E_strain"


def test_strain_at_upper_bound_is_allowed():
    p = ScenarioParams()
    assert p.replace(E_strain=p.D_zfs / 3).E_strain == p.D_zfs / 3


@pytest.mark.parametrize(
    "changes, key",
    [
        ({"mass": 0.0}, "mass"),
        ({"t_flip": 0.3}, "tau1"),
        ({"beta0": 0.0}, "beta0"),
        ({"beta0": 2.0}, "beta0"),
        ({"omega0": -1.0}, "omega0"),
        ({"L_height": None, "DL_ratio": None}, "DL_ratio"),
    ],
)
def test_validation_errors_carry_the_key(changes, key):
    with pytest.raises(ConfigError) as exc:
        ScenarioParams(**{**ScenarioParams().as_dict(), **changes})
    assert exc.value.key == key


def test_beta0_zero_only_without_spin():
    assert ScenarioParams(omega0=0.0, beta0=0.0).beta0 == 0.0


def test_digest_is_stable_and_sensitive():
    a, b = ScenarioParams(), ScenarioParams()
    assert a.digest() == b.digest()
    assert a.digest() != a.replace(mass=2e-17).digest()


def test_shape_classes():
    assert classify_shape(build_geometry(1e-17, 3.5e3, DL_ratio=0.1)) == "long-cylinder"
    assert classify_shape(build_geometry(1e-17, 3.5e3, DL_ratio=1.0)) == "normal"
    assert classify_shape(build_geometry(1e-17, 3.5e3, DL_ratio=10.0)) == "disk"


@given(
    mass=st.floats(1e-19, 1e-13),
    ratio=st.floats(0.05, 20.0),
)
def test_dl_ratio_geometry_roundtrip(mass, ratio):
    g = build_geometry(mass, 3.5e3, DL_ratio=ratio)
    assert g.DL_ratio == pytest.approx(ratio, rel=1e-12)
    # volume reproduces the mass
    assert 3.5e3 * math.pi * g.radius**2 * g.height == pytest.approx(mass, rel=1e-12)


@given(mass=st.floats(1e-19, 1e-13), height=st.floats(1e-8, 1e-6))
def test_inertia_positive_and_ratio_below_two(mass, height):
    g = build_geometry(mass, 3.5e3, L_height=height)
    assert g.I_perp > 0 and g.I_3 > 0
    # I3/I = 6R^2/(3R^2+L^2) < 2 for any finite cylinder
    assert 0 < g.inertia_ratio < 2


def test_inertia_formula():
    I, I3 = cylinder_inertia(2.0, 1.0, 2.0)
    assert I == pytest.approx(2.0 * (3 + 4) / 12)
    assert I3 == pytest.approx(1.0)
