"""Numerical laboratory for a pulsed stretch-fold-shear dynamo on the torus."""

from .fields import Field3, divergence3, inner, l2_norm, make_div_free, random_field
from .map_core import apply_inverse, apply_map, flow_map, grid_pullback_table
from .operators import (
    OperatorContext,
    apply_heat,
    limit_pushforward,
    make_context,
    pulsed_step_3d,
    pulsed_step_planar,
    pushforward_ideal,
    solve_vertical_component,
)
from .shear import ShearProfile, build_shear, limit_matrix, quadrant_integrals, zero_shear
from .spectral import (
    evolve_and_trace,
    flux_experiment,
    leading_eigenvalue,
    limit_convergence,
    power_iteration,
)

__version__ = "0.1.0"

__all__ = [
    "Field3", "divergence3", "inner", "l2_norm", "make_div_free", "random_field",
    "apply_inverse", "apply_map", "flow_map", "grid_pullback_table",
    "OperatorContext", "apply_heat", "limit_pushforward", "make_context",
    "pulsed_step_3d", "pulsed_step_planar", "pushforward_ideal",
    "solve_vertical_component",
    "ShearProfile", "build_shear", "limit_matrix", "quadrant_integrals", "zero_shear",
    "evolve_and_trace", "flux_experiment", "leading_eigenvalue",
    "limit_convergence", "power_iteration",
]
