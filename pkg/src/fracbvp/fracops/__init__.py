"""Fractional integrals and derivatives on (0, 1) in closed form."""

from .integrate import breakpoints_of, cell_integrals, integrate_product, l2_norm
from .operators import (
    FracOrder,
    caputo_left,
    caputo_right,
    left_frac_integral,
    left_integral_ts,
    oracle_frac_integral,
    right_frac_integral,
    right_integral_ts,
    rl_derivative_of_integral,
    two_sided_integral,
    two_sided_ts,
)
from .special import beta_fn, gamma
from .terms import LEFT, RIGHT, PiecewisePoly, PowerTermSum, as_termsum

__all__ = [
    "FracOrder",
    "LEFT",
    "PiecewisePoly",
    "PowerTermSum",
    "RIGHT",
    "as_termsum",
    "beta_fn",
    "breakpoints_of",
    "caputo_left",
    "caputo_right",
    "cell_integrals",
    "gamma",
    "integrate_product",
    "l2_norm",
    "left_frac_integral",
    "left_integral_ts",
    "oracle_frac_integral",
    "right_frac_integral",
    "right_integral_ts",
    "rl_derivative_of_integral",
    "two_sided_integral",
    "two_sided_ts",
]
