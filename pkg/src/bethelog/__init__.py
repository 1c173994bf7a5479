"""Numerical workbench for the nonrelativistic Bethe-log level shift.

Two independent routes to the ground-state shift are implemented and
cross-checked: the zero-point mode-energy change of a dilute dispersive
medium, and the same energy augmented by the dipole self-interaction.
Hartree atomic units throughout.
"""

from .constants import C_LIGHT, HARTREE_MHZ, DEFAULT_CUTOFF
from .errors import (
    BetheLogError,
    PreconditionError,
    ConvergenceError,
    InvariantError,
    SchemaError,
    UnitError,
    AccuracyError,
    ConsistencyError,
    ResolutionError,
)
from .quadrature import QuadratureConfig, Cutoff, integrate, pv_integral, cutoff_moment
from .spectrum import Transition, Spectrum, ContinuumGrid, trk_sum, static_polarizability
from .hydrogen import build_hydrogen, default_grid
from .polarizability import DampingModel, Sign, alpha_complex

__version__ = "0.1.0"

__all__ = [
    "C_LIGHT",
    "HARTREE_MHZ",
    "DEFAULT_CUTOFF",
    "BetheLogError",
    "PreconditionError",
    "ConvergenceError",
    "InvariantError",
    "SchemaError",
    "UnitError",
    "AccuracyError",
    "ConsistencyError",
    "ResolutionError",
    "QuadratureConfig",
    "Cutoff",
    "integrate",
    "pv_integral",
    "cutoff_moment",
    "Transition",
    "Spectrum",
    "ContinuumGrid",
    "trk_sum",
    "static_polarizability",
    "build_hydrogen",
    "default_grid",
    "DampingModel",
    "Sign",
    "alpha_complex",
]
