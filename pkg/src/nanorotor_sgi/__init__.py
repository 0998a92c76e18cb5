"""Stern-Gerlach interferometry of a spinning cylindrical nanorotor with an
embedded spin-1 defect: trajectories, libration mismatches and spin contrast."""

from .units import (
    CONSTANTS,
    ConfigError,
    CylinderGeometry,
    PhysicalConstants,
    ScenarioParams,
    build_geometry,
    classify_shape,
    radius_from_mass,
)
from .field import FieldProfile, FieldSample, field_at_defect, sample
from .spin import (
    EffectiveSpin2,
    ProjectionValidityError,
    RotorMechanicalState,
    SpinMatrix3,
    WindowReport,
    build_h_spin,
    edh_rhs,
    feshbach_reduce,
    spin_potential,
    validate_omega0,
)
from .dynamics import (
    ArmPair,
    ArmTrajectory,
    ChartError,
    ConservedMomenta,
    IntegrationError,
    IntegratorOptions,
    RotorState,
    alpha_gamma_rhs,
    beta_rhs_full,
    integrate_arm,
    run_pair,
    z_rhs,
)

__version__ = "0.1.0"
