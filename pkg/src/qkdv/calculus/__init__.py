from .numeric import (NormLadder, NormLevel, calibrate_constants, equivalence_envelope, evaluate_expr,
                      gauge_field, gauge_ode_residual, monomial_ratios, residual_scale, weighted_derivative,
                      weighted_derivatives, weighted_norm)
from .symbolic import (Coefficients, GaugedExpr, coefficient_recursion, derive_direct, expr_weight,
                       format_expr, principal_coefficient)

__all__ = [
    "Coefficients", "GaugedExpr", "NormLadder", "NormLevel", "calibrate_constants", "coefficient_recursion",
    "derive_direct", "equivalence_envelope", "evaluate_expr", "expr_weight", "format_expr", "gauge_field",
    "gauge_ode_residual", "monomial_ratios", "principal_coefficient", "residual_scale", "weighted_derivative",
    "weighted_derivatives", "weighted_norm",
]
