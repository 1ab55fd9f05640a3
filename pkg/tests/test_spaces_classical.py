import math

import numpy as np
import pytest

from fracbvp.classical import DiffusivityField, fem_second_order, hat_loads, solve_wf, solve_wl_wr
from fracbvp.errors import DomainError, ParameterError
from fracbvp.fracops import PowerTermSum, oracle_frac_integral
from fracbvp.spaces import (
    FemSpace,
    build_partition,
    energy_error,
    hat_basis,
    interpolant,
    j_seminorm,
    l2_inner,
    l2_norm,
)

P = PowerTermSum.polynomial
BUBBLE = P([0.0, 1.0, -1.0])
# |x(1-x)|_{J^1/2} of the zero extension = 1 / (2 sqrt(pi)), mpmath quadrature
J_HALF_BUBBLE_LINE = 0.282094791773878143
J_HALF_BUBBLE_INTERVAL = 0.265961520267621785


def test_partitions():
    np.testing.assert_allclose(build_partition(4).nodes, [0, 0.25, 0.5, 0.75, 1])
    np.testing.assert_allclose(build_partition(4, ("graded", 2.0)).nodes, [0, 0.0625, 0.25, 0.5625, 1])
    np.testing.assert_allclose(build_partition(2).nodes, [0, 0.5, 1])
    with pytest.raises(ParameterError):
        build_partition(1)
    with pytest.raises(ParameterError):
        build_partition(4, ("graded", 0.5))


def test_hat_basis():
    (phi,) = hat_basis(FemSpace(build_partition(2)))
    assert phi(0.5) == 1.0 and phi(0.0) == 0.0 and phi(1.0) == 0.0
    assert len(hat_basis(FemSpace(build_partition(4)))) == 3
    free = hat_basis(FemSpace(build_partition(2), boundary="free"))
    assert len(free) == 3 and free[0](0.0) == 1.0 and free[-1](1.0) == 1.0


def test_l2_inner():
    assert l2_inner(P([1.0]), P([1.0])) == pytest.approx(1.0, rel=1e-14)
    assert l2_inner(P([0.0, 1.0]), P([0.0, 1.0])) == pytest.approx(1.0 / 3.0, rel=1e-14)
    sing = PowerTermSum.from_terms([(1.0, 0.0, "left", -0.25)])
    assert l2_inner(sing, P([1.0])) == pytest.approx(4.0 / 3.0, rel=1e-13)


def test_j_seminorm_values():
    assert j_seminorm(PowerTermSum.zero(), 0.5) == 0.0
    assert j_seminorm(BUBBLE, 0.5) == pytest.approx(J_HALF_BUBBLE_LINE, rel=1e-10)
    assert j_seminorm(BUBBLE, 0.5, domain="interval") == pytest.approx(J_HALF_BUBBLE_INTERVAL, rel=1e-10)
    # symmetric w: left and right seminorms agree; two-sided at theta=1 is the left one
    assert j_seminorm(BUBBLE, 0.7, "right") == pytest.approx(j_seminorm(BUBBLE, 0.7), rel=1e-10)
    assert j_seminorm(BUBBLE, 0.7, "two_sided", theta=1.0) == pytest.approx(j_seminorm(BUBBLE, 0.7), rel=1e-14)


def test_j_seminorm_interval_matches_oracle():
    # L2 norm over (0, 1) of lI^0.5 Dw with Dw = 1 - 2x, evaluated by the oracle
    t, w = np.polynomial.legendre.leggauss(40)
    x = 0.5 * (t + 1.0)
    vals = np.array([oracle_frac_integral(lambda s: 1.0 - 2.0 * s, 0.5, xi) for xi in x])
    ref = math.sqrt(0.5 * np.sum(w * vals**2))
    assert j_seminorm(BUBBLE, 0.5, domain="interval") == pytest.approx(ref, rel=1e-6)


def test_j_seminorm_needs_zero_trace():
    with pytest.raises(DomainError):
        j_seminorm(P([0.0, 1.0]), 0.5)


def test_energy_error():
    assert energy_error(BUBBLE, BUBBLE, 0.75) == 0.0
    space = FemSpace(build_partition(4))
    zero = space.function(np.zeros(3))
    assert energy_error(zero, BUBBLE, 0.75) == pytest.approx(j_seminorm(BUBBLE, 0.75), rel=1e-12)


@pytest.mark.parametrize("beta", [0.3, 0.6])
def test_interpolation_error_rate(beta):
    mu = 1.0 - beta / 2.0
    w = P([0.0, 1.0, 0.0, -1.0])
    errs = [energy_error(interpolant(FemSpace(build_partition(n)), w), w, mu) for n in (32, 64, 128)]
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(rates - (1.0 + beta / 2.0)) < 0.1)


def test_harmonic_profiles():
    for c in (1.0, 5.0):
        wl, wr = solve_wl_wr(DiffusivityField.constant(c))
        x = np.linspace(0, 1, 11)
        np.testing.assert_allclose(wl(x), 1.0 - x, atol=1e-14)
        np.testing.assert_allclose(wr(x), x, atol=1e-14)
    _, wr = solve_wl_wr(DiffusivityField.piecewise_constant([0.5], [1.0, 2.0]))
    assert wr(0.5) == pytest.approx(2.0 / 3.0, rel=1e-14)


def test_forcing_profile():
    x = np.linspace(0, 1, 21)
    np.testing.assert_allclose(solve_wf(DiffusivityField.constant(1.0), 2.0)(x), x * (1 - x), atol=1e-14)
    np.testing.assert_allclose(solve_wf(DiffusivityField.constant(1.0), 0.0)(x), 0.0, atol=0)
    np.testing.assert_allclose(solve_wf(DiffusivityField.constant(2.0), 2.0)(x), x * (1 - x) / 2, atol=1e-14)


def test_second_order_fem():
    space = FemSpace(build_partition(16))
    nodes = space.nodes[space.dof_nodes]
    K1 = DiffusivityField.constant(1.0)
    u = fem_second_order(K1, 2.0, space)
    np.testing.assert_allclose(u.coefficients, nodes * (1 - nodes), atol=1e-13)
    assert np.all(hat_loads(0.0, space) == 0.0)
    K = DiffusivityField.piecewise_constant([0.25, 0.625], [1.0, 3.0, 0.5])
    u = fem_second_order(K, P([1.0, 2.0]), space)
    np.testing.assert_allclose(u.coefficients, solve_wf(K, P([1.0, 2.0]))(nodes), atol=1e-10)


def test_diffusivity_validation_and_roundtrip():
    with pytest.raises(DomainError):
        DiffusivityField.polynomial([1.0, -2.0])
    with pytest.raises(ParameterError):
        DiffusivityField.piecewise_constant([0.5], [1.0])
    for K in (
        DiffusivityField.constant(2.0),
        DiffusivityField.piecewise_constant([0.3], [1.0, 2.0]),
        DiffusivityField.polynomial([1.0, 0.5]),
        DiffusivityField.tabulated([0.0, 0.5, 1.0], [1.0, 2.0, 1.5]),
    ):
        assert DiffusivityField.from_dict(K.to_dict()).to_dict() == K.to_dict()


def test_l2_norm_of_gridfunction():
    space = FemSpace(build_partition(2))
    u = space.function([1.0])
    assert l2_norm(u) == pytest.approx(math.sqrt(1.0 / 3.0), rel=1e-14)
