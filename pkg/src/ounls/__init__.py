"""Pseudospectral solver and verification harness for nonlinear
Schrodinger equations with Ornstein-Uhlenbeck confinement in one
transverse direction."""

__version__ = "0.1.0"

from .grids import BoxGrid, laplacian_symbol, x_norms
from .hermite import AlphaProfile, HermiteBasis, build_basis, hermite_forward, hermite_inverse, weighted_norm
from .models import DiscretizationSpec, ModelSpec
from .operators import (
    DivAlphaOperator,
    LinearPropagator,
    Machinery,
    apply_div_operator,
    apply_nonlinearity,
    apply_ou_nondiv,
    build_div_operator,
    build_linear_propagator,
    build_machinery,
    verify_div_identity,
)
from .state import Field
from .stepping import BlowupThresholds, StepControl, StepperState, detect_blowup, integrate, strang_step

__all__ = [
    "AlphaProfile",
    "BlowupThresholds",
    "BoxGrid",
    "DiscretizationSpec",
    "DivAlphaOperator",
    "Field",
    "HermiteBasis",
    "LinearPropagator",
    "Machinery",
    "ModelSpec",
    "StepControl",
    "StepperState",
    "apply_div_operator",
    "apply_nonlinearity",
    "apply_ou_nondiv",
    "build_basis",
    "build_div_operator",
    "build_linear_propagator",
    "build_machinery",
    "detect_blowup",
    "hermite_forward",
    "hermite_inverse",
    "integrate",
    "laplacian_symbol",
    "strang_step",
    "verify_div_identity",
    "weighted_norm",
    "x_norms",
]
