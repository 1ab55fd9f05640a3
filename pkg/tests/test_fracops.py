import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracbvp.errors import DomainError, ParameterError, UnsupportedRepresentationError
from fracbvp.fracops import (
    FracOrder,
    PiecewisePoly,
    PowerTermSum,
    caputo_left,
    caputo_right,
    gamma,
    integrate_product,
    left_frac_integral,
    oracle_frac_integral,
    right_frac_integral,
    rl_derivative_of_integral,
    two_sided_integral,
)
from fracbvp.fracops.special import set_gamma_fault
from fracbvp.galerkin import zigzag_w

P = PowerTermSum.polynomial
X = np.linspace(0.0, 1.0, 41)[1:-1]

# reference values from 30-digit mpmath quadrature
RIGHT_X_AT_0 = 0.376126389031837524  # rI^0.5 (s) at 0 = 2 / (3 sqrt(pi))
GAMMA3_OVER_GAMMA325 = 0.784542329828150939


@pytest.mark.parametrize("x, ref", [(1.0, 1.0), (1.5, 0.8862269254527580), (4.0, 6.0)])
def test_gamma_values(x, ref):
    assert gamma(x) == pytest.approx(ref, rel=1e-14)


@given(st.floats(0.01, 12.0))
def test_gamma_matches_stdlib(x):
    assert gamma(x) == pytest.approx(math.gamma(x), rel=1e-13)


def test_gamma_rejects_nonpositive():
    with pytest.raises(DomainError):
        gamma(0.0)


def test_gamma_fault_hook_perturbs_and_resets():
    set_gamma_fault(1e-3)
    try:
        assert gamma(2.0) == pytest.approx(1.002, rel=1e-12)
    finally:
        set_gamma_fault(0.0)
    assert gamma(2.0) == pytest.approx(1.0, rel=1e-14)


def test_frac_order():
    o = FracOrder(1.25)
    assert (o.m, o.sigma) == (2, pytest.approx(0.75))
    with pytest.raises(ParameterError):
        FracOrder(0.0)


def test_left_integral_of_one():
    assert left_frac_integral(P([1.0]), 0.5, 1.0) == pytest.approx(1.1283791670955126, rel=1e-14)
    assert left_frac_integral(PowerTermSum.zero(), 0.3, 0.7) == 0.0


def test_right_integral_of_one_and_of_x():
    assert right_frac_integral(P([1.0]), 0.5, 0.0) == pytest.approx(1.1283791670955126, rel=1e-14)
    assert right_frac_integral(P([0.0, 1.0]), 0.5, 0.0) == pytest.approx(RIGHT_X_AT_0, rel=1e-13)


@pytest.mark.parametrize("beta", [0.2, 0.5, 0.8])
def test_integrals_of_kinked_derivative(beta):
    dw = zigzag_w().to_termsum().derivative()
    x = np.linspace(0.0, 0.25, 11)
    np.testing.assert_allclose(left_frac_integral(dw, beta, x), 4.0 / gamma(beta + 1.0) * x**beta, atol=1e-13)
    x = np.linspace(0.75, 1.0, 11)
    np.testing.assert_allclose(right_frac_integral(dw, beta, x), 4.0 / gamma(beta + 1.0) * (1.0 - x) ** beta,
                               atol=1e-13)


def test_two_sided_limits_and_value():
    w = P([0.0, 1.0, -3.0, 2.0])
    np.testing.assert_allclose(two_sided_integral(w, 0.4, 1.0, X), left_frac_integral(w, 0.4, X))
    np.testing.assert_allclose(two_sided_integral(w, 0.4, 0.0, X), right_frac_integral(w, 0.4, X))
    assert two_sided_integral(P([1.0]), 0.5, 0.5, 0.5) == pytest.approx(0.7978845608, abs=1e-10)


def test_caputo_values():
    np.testing.assert_allclose(caputo_left(P([0.0, 1.0]), 0.5)(X), X**0.5 / math.gamma(1.5), rtol=1e-13)
    np.testing.assert_allclose(caputo_left(P([0.0, 0.0, 1.0]), 0.5)(X), 2 * X**1.5 / math.gamma(2.5), rtol=1e-13)
    assert np.all(caputo_left(P([3.0]), 0.6)(X) == 0.0)
    # mirror: right Caputo of w equals left Caputo of the reflection, reflected
    w = P([0.0, 1.0, -1.0, 0.5])
    np.testing.assert_allclose(caputo_right(w, 0.7)(X), caputo_left(w.reflect(), 0.7)(1.0 - X), atol=1e-12)


def test_rl_derivative_of_integral_matches_integral_of_derivative():
    w = P([0.0, 1.0, -1.0])
    np.testing.assert_allclose(rl_derivative_of_integral(w, 0.3, 1.0)(X), P([1.0, -2.0]).left_integral(0.3)(X),
                               atol=1e-12)
    assert len(rl_derivative_of_integral(PowerTermSum.zero(), 0.3, 0.5)) == 0
    d = P([0.0, 1.0, -1.0]).left_integral(0.4).derivative()(X) - P([1.0, -2.0]).left_integral(0.4)(X)
    assert np.max(np.abs(d)) <= 1e-10


def test_rl_derivative_nonzero_trace_differentiates_directly():
    # D lI^b x = x^b / Gamma(1 + b), D rI^b x at x picks up the boundary term
    got = rl_derivative_of_integral(P([0.0, 1.0]), 0.3, 1.0)(X)
    np.testing.assert_allclose(got, X**0.3 / math.gamma(1.3), rtol=1e-12)
    direct = P([0.0, 1.0]).right_integral(0.3).derivative()(X)
    np.testing.assert_allclose(rl_derivative_of_integral(P([0.0, 1.0]), 0.3, 0.0)(X), direct, rtol=1e-12)


def test_oracle_values():
    assert oracle_frac_integral(lambda s: np.ones_like(s), 0.5, 1.0, 64) == pytest.approx(1.1283791671, abs=1e-10)
    assert oracle_frac_integral(lambda s: s**2, 0.25, 1.0, 64) == pytest.approx(GAMMA3_OVER_GAMMA325, rel=1e-12)
    assert oracle_frac_integral(np.cos, 0.5, 0.0) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.05, 1.0), st.integers(0, 4))
def test_power_rule_against_oracle(sigma, x, p):
    closed = P([0.0] * p + [1.0]).left_integral(sigma)(x)
    ref = oracle_frac_integral(lambda s: s**p, sigma, x)
    assert closed == pytest.approx(ref, rel=1e-10, abs=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.0, 0.95))
def test_right_integral_against_oracle_with_kinks(sigma, x):
    pp = PiecewisePoly.from_nodal([0.0, 0.3, 0.6, 1.0], [0.0, 1.0, -0.5, 0.0])
    closed = pp.to_termsum().right_integral(sigma)(x)
    ref = oracle_frac_integral(pp, sigma, x, side="right", breakpoints=(0.3, 0.6))
    assert closed == pytest.approx(ref, rel=1e-10, abs=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=5), st.lists(st.floats(-3, 3), min_size=1, max_size=5),
       st.floats(-2, 2))
def test_term_algebra_linearity(a, b, c):
    A, B = P(a), P(b)
    lhs = (A + B * c).left_integral(0.35)(X)
    rhs = A.left_integral(0.35)(X) + c * B.left_integral(0.35)(X)
    assert np.max(np.abs(lhs - rhs)) <= 1e-11 * (1 + np.max(np.abs(rhs)))


def test_reflection_of_terms():
    w = P([0.0, 2.0, -1.0, 0.3])
    np.testing.assert_allclose(w.reflect()(X), w(1.0 - X), atol=1e-13)


def test_non_integrable_exponent_rejected():
    with pytest.raises(UnsupportedRepresentationError):
        PowerTermSum.from_terms([(1.0, 0.0, "left", -1.0)])


def test_integrate_product_singular():
    ts = PowerTermSum.from_terms([(1.0, 0.0, "left", -0.25)])
    assert integrate_product(ts) == pytest.approx(4.0 / 3.0, rel=1e-13)
    assert integrate_product(P([0.0, 1.0]), P([0.0, 1.0])) == pytest.approx(1.0 / 3.0, rel=1e-14)


def test_evaluation_outside_unit_interval_rejected():
    with pytest.raises(DomainError):
        left_frac_integral(P([1.0]), 0.5, 1.5)
    with pytest.raises(ParameterError):
        left_frac_integral(P([1.0]), 1.5, 0.5)
