"""Riemann-Liouville integrals, Caputo derivatives and the two-sided operator.

Closed-form routes act on PowerTermSums via the power rule

    lI^s (x - a)_+^q = Gamma(q+1)/Gamma(q+1+s) (x - a)_+^(q+s),

and the right-sided mirror. `oracle_frac_integral` is an independent
quadrature of the defining kernel integral, used only for cross-checks.
"""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, ParameterError, UnsupportedRepresentationError
from .quadrature import gauss_jacobi, gauss_legendre
from .terms import PowerTermSum, as_termsum

_BOUNDARY_TOL = 1e-13


@dataclass(frozen=True)
class FracOrder:
    """Order mu = m - sigma of a fractional derivative (or sigma of an integral)."""

    mu: float

    def __post_init__(self):
        if not self.mu > 0:
            raise ParameterError(f"fractional order must be positive, got {self.mu}")

    @property
    def m(self):
        return int(math.ceil(self.mu - 1e-14))

    @property
    def sigma(self):
        return self.m - self.mu


def _check_sigma(sigma):
    if not 0.0 < sigma < 1.0:
        raise ParameterError(f"integral order must lie in (0, 1), got {sigma}")


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any((x < 0.0) | (x > 1.0)) or np.any(~np.isfinite(x)):
        raise DomainError("evaluation point outside [0, 1]")
    return x


def _out(val, x):
    return float(val) if np.ndim(x) == 0 else val


def left_integral_ts(w, sigma):
    """lI^sigma w as a PowerTermSum."""
    return as_termsum(w).left_integral(sigma)


def right_integral_ts(w, sigma):
    """rI^sigma w as a PowerTermSum."""
    return as_termsum(w).right_integral(sigma)


def two_sided_ts(w, beta, theta):
    """I^beta_theta w = theta lI^beta w + (1 - theta) rI^beta w."""
    _check_theta(theta)
    ts = as_termsum(w)
    out = PowerTermSum.zero()
    if theta != 0.0:
        out = out + theta * ts.left_integral(beta)
    if theta != 1.0:
        out = out + (1.0 - theta) * ts.right_integral(beta)
    return out


def _check_theta(theta):
    if not 0.0 <= theta <= 1.0:
        raise ParameterError(f"theta must lie in [0, 1], got {theta}")


def left_frac_integral(w, sigma, x):
    """Left Riemann-Liouville integral of order sigma evaluated at x."""
    _check_sigma(sigma)
    x = _check_x(x)
    return _out(left_integral_ts(w, sigma)(x), x)


def right_frac_integral(w, sigma, x):
    """Right Riemann-Liouville integral of order sigma evaluated at x."""
    _check_sigma(sigma)
    x = _check_x(x)
    return _out(right_integral_ts(w, sigma)(x), x)


def two_sided_integral(w, beta, theta, x):
    """theta * lI^beta w(x) + (1 - theta) * rI^beta w(x)."""
    _check_sigma(beta)
    x = _check_x(x)
    return _out(two_sided_ts(w, beta, theta)(x), x)


def _derivative_n(ts, m, fail_inside=True):
    if fail_inside:
        inside = (ts.anchors > 0.0) & (ts.anchors < 1.0) & (ts.exps < m - 1e-12)
        if np.any(inside):
            raise UnsupportedRepresentationError(
                f"a term anchored inside (0, 1) has exponent below the derivative order {m}"
            )
    for _ in range(m):
        ts = ts.derivative()
    return ts


def caputo_left(w, mu):
    """Left Caputo derivative lI^sigma D^m w with mu = m - sigma."""
    order = FracOrder(mu)
    d = _derivative_n(as_termsum(w).restrict_to_unit(), order.m)
    return d.left_integral(order.sigma) if order.sigma > 0 else d


def caputo_right(w, mu):
    """Right Caputo derivative rI^sigma (-D)^m w."""
    order = FracOrder(mu)
    d = _derivative_n(as_termsum(w).restrict_to_unit(), order.m) * ((-1.0) ** order.m)
    return d.right_integral(order.sigma) if order.sigma > 0 else d


def rl_derivative_of_integral(w, beta, theta):
    """D I^beta_theta w in closed form.

    For w(0) = w(1) = 0 the derivative commutes with both one-sided integrals,
    so the result is theta lI^beta Dw + (1 - theta) rI^beta Dw. Otherwise the
    term algebra of I^beta_theta w is differentiated directly, which produces
    the (x)^(beta-1) and (1-x)^(beta-1) boundary terms.
    """
    _check_sigma(beta)
    _check_theta(theta)
    ts = as_termsum(w).restrict_to_unit()
    if abs(ts(0.0)) <= _BOUNDARY_TOL and _vanishes_at_one(ts):
        return two_sided_ts(ts.derivative(), beta, theta)
    return two_sided_ts(ts, beta, theta).derivative()


def _vanishes_at_one(ts):
    # left-sided Heaviside terms are right-continuous, so probe just inside
    return abs(ts(np.nextafter(1.0, 0.0))) <= _BOUNDARY_TOL


def oracle_frac_integral(f, sigma, x, n_nodes=32, side="left", breakpoints=(), ratio=0.2, offset=0.0):
    """Reference value of a one-sided RL integral of a callable by quadrature.

    The evaluation point is x + offset; passing a breakpoint as x and a small
    exact offset keeps distances to nearby breakpoints free of rounding. The
    piece adjacent to the point is integrated with a Gauss-Jacobi rule whose
    weight absorbs |x - s|^(sigma - 1); farther pieces (split at the given
    breakpoints of f) use Gauss-Legendre rules graded geometrically toward
    the end nearest the point, with nodes parametrised by their offset from
    that end. Gamma(sigma) comes from the standard library, keeping this path
    independent of the package's own special functions.
    """
    if n_nodes < 2:
        raise ParameterError("oracle needs at least 2 nodes")
    if not 0.0 < sigma < 1.0:
        raise ParameterError(f"integral order must lie in (0, 1), got {sigma}")
    if side not in ("left", "right"):
        raise ParameterError("side must be 'left' or 'right'")
    x, offset = float(x), float(offset)
    bp = np.asarray(breakpoints, dtype=float)
    ends = np.unique(np.concatenate([[0.0, 1.0], bp[(bp > 0.0) & (bp < 1.0)]]))
    # signed distance from the evaluation point to every end
    dist = (ends - x) - offset
    sgn = -1.0 if side == "left" else 1.0
    keep = sgn * dist > 0.0
    ends, dist = ends[keep], np.abs(dist[keep])
    if ends.size == 0:
        return 0.0
    order = np.argsort(dist)
    ends, dist = ends[order], dist[order]
    total = 0.0
    # adjacent piece; nodes kept strictly on the evaluation point's side
    t, w = gauss_jacobi(n_nodes, sigma - 1.0, 0.0)
    s = ends[0] - sgn * dist[0] * (1.0 - t)
    edge = np.nextafter(ends[0], -sgn * np.inf)
    s = np.minimum(s, edge) if sgn > 0 else np.maximum(s, edge)
    total += dist[0] ** sigma * np.dot(w, _vals(f, s))
    tl, wl = gauss_legendre(n_nodes)
    for k in range(ends.size - 1):
        near_end, far_end, gap = ends[k], ends[k + 1], dist[k]
        length = dist[k + 1] - gap
        levels = 0
        if gap < length:
            levels = min(80, int(math.ceil(math.log(gap / length) / math.log(ratio))) + 1)
        cuts = length * ratio ** np.arange(levels, -1, -1.0) if levels else np.array([length])
        cuts = np.concatenate([[0.0], cuts])
        lo, hi = sorted((np.nextafter(near_end, sgn * np.inf), np.nextafter(far_end, -sgn * np.inf)))
        for a, b in zip(cuts[:-1], cuts[1:]):
            u = a + (b - a) * tl
            s = np.clip(near_end + sgn * u, lo, hi)
            total += (b - a) * np.dot(wl, _vals(f, s) * (gap + u) ** (sigma - 1.0))
    return total / math.gamma(sigma)


def _vals(f, s):
    return np.broadcast_to(np.asarray(f(s), dtype=float), s.shape)
