"""Semiclassical dynamics of a charged particle in a magnetic monopole density."""

from .core import (
    ConstantZ,
    LinearZ,
    MomentState,
    Params,
    energy,
    field_eval,
    jacobiator,
    levi_civita,
    momentum_commutator_coefficient,
)
from .dynamics import IntegratorConfig, Trajectory, evolve, mean_rhs, moment_rhs, uncertainty_measures
from .effpot import effective_force, kink_jump, minimum, veff, veff_scan
from .stationary import SaturationMode, adiabatic_constraints, residual, saturate

__version__ = "0.1.0"
