"""Gamma and Beta functions (Lanczos approximation, g = 7, nine coefficients)."""

import math

from ..errors import DomainError

_G = 7.0
_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_SQRT_2PI = math.sqrt(2.0 * math.pi)

# Relative perturbation applied to every gamma evaluation; only ever set by
# the negative-control machinery of the verification suite.
_fault_scale = 0.0


def set_gamma_fault(scale):
    """Perturb gamma(x) by a factor (1 + scale * x); 0 disables the fault."""
    global _fault_scale
    _fault_scale = float(scale)


def _lanczos(x):
    if x < 0.5:
        # reflection formula
        return math.pi / (math.sin(math.pi * x) * _lanczos(1.0 - x))
    x -= 1.0
    acc = _COEFFS[0]
    for i in range(1, 9):
        acc += _COEFFS[i] / (x + i)
    t = x + _G + 0.5
    return _SQRT_2PI * t ** (x + 0.5) * math.exp(-t) * acc


def gamma(x):
    """Gamma function for x > 0."""
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"gamma requires a positive argument, got {x}")
    if x == round(x) and x <= 20.0:
        val = float(math.factorial(int(x) - 1))
    else:
        val = _lanczos(x)
    if _fault_scale:
        val *= 1.0 + _fault_scale * x
    return val


def beta_fn(a, b):
    """Euler Beta function B(a, b) for a, b > 0."""
    return gamma(a) * gamma(b) / gamma(a + b)


def power_rule_factor(q, sigma):
    """Gamma(q+1)/Gamma(q+1+sigma): the coefficient produced by integrating x^q."""
    return gamma(q + 1.0) / gamma(q + 1.0 + sigma)
