"""Manufactured solutions: pick u, derive f = -D(K D I^beta_theta u) exactly."""

import math
from dataclasses import dataclass

import numpy as np

from ..classical import DiffusivityField
from ..errors import DomainError, UnsupportedRepresentationError
from ..fracops import oracle_frac_integral, rl_derivative_of_integral
from ..fracops.terms import PowerTermSum, as_termsum

RESIDUAL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ManufacturedCase:
    u_exact: PowerTermSum
    K: DiffusivityField
    beta: float
    theta: float
    f: PowerTermSum
    flux: PowerTermSum  # K D I^beta_theta u


def manufacture(u_exact, K, beta, theta):
    """Case with f computed inside the term algebra.

    u must vanish at 0 and 1 and K must be a polynomial (constants included),
    so K D I u stays a finite sum of truncated powers.
    """
    u = as_termsum(u_exact).restrict_to_unit()
    scale = max(1.0, float(np.max(np.abs(u.coeffs)))) if len(u) else 1.0
    if abs(u(0.0)) > 1e-12 * scale or abs(u(np.nextafter(1.0, 0.0))) > 1e-12 * scale:
        raise DomainError("a manufactured solution must vanish at 0 and 1")
    try:
        coeffs = K.poly_coeffs()
    except UnsupportedRepresentationError as exc:
        raise UnsupportedRepresentationError(f"manufactured data needs a polynomial K ({exc})") from exc
    flux = rl_derivative_of_integral(u, beta, theta).multiply_poly(coeffs)
    f = -flux.derivative()
    return ManufacturedCase(u, K, float(beta), float(theta), f, flux)


def _poly_callable(ts):
    """Callable derivative data for the oracle: plain numpy evaluation."""
    return lambda s: ts(np.asarray(s, dtype=float))


def strong_residual(case, n_points=100, n_nodes=32):
    """max |f + D(K D I u)| at interior points, the flux derivative by quadrature.

    D(K D I u) = K' (D I u) + K D(D I u) with
    D I u = theta lI Du + (1-theta) rI Du and
    D(D I u) = theta (lI D^2u + Du(0) x^(beta-1)/Gamma(beta))
             + (1-theta)(rI D^2u - Du(1)(1-x)^(beta-1)/Gamma(beta)),
    each one-sided integral evaluated by the quadrature oracle.
    """
    u, beta, theta = case.u_exact, case.beta, case.theta
    du = u.derivative()
    d2u = du.derivative()
    du0 = float(du(0.0))
    du1 = float(du(np.nextafter(1.0, 0.0)))
    P = np.polynomial.polynomial
    kc = case.K.poly_coeffs()
    bps = du.breakpoints()
    g = math.gamma(beta)
    x = np.arange(1, n_points + 1) / (n_points + 1.0)
    worst = 0.0
    for xi in x:
        flux = d_flux = 0.0
        if theta:
            flux += theta * oracle_frac_integral(_poly_callable(du), beta, xi, n_nodes, "left", bps)
            d_flux += theta * (
                oracle_frac_integral(_poly_callable(d2u), beta, xi, n_nodes, "left", bps)
                + du0 * xi ** (beta - 1.0) / g
            )
        if theta != 1.0:
            flux += (1.0 - theta) * oracle_frac_integral(_poly_callable(du), beta, xi, n_nodes, "right", bps)
            d_flux += (1.0 - theta) * (
                oracle_frac_integral(_poly_callable(d2u), beta, xi, n_nodes, "right", bps)
                - du1 * (1.0 - xi) ** (beta - 1.0) / g
            )
        lhs = P.polyval(xi, P.polyder(kc)) * flux + P.polyval(xi, kc) * d_flux
        worst = max(worst, abs(float(case.f(xi)) + lhs))
    return worst
