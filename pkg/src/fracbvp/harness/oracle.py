"""Brute-force reference quadratures used to cross-check closed-form paths."""

import math

import numpy as np

from ..errors import OracleError, ParameterError
from ..fracops.operators import oracle_frac_integral
from ..fracops.quadrature import composite_rule, graded_points
from ..fracops.terms import PiecewisePoly, PowerTermSum
from ..spaces import GridFunction

# (grading levels, Gauss points per subinterval) per adaptive round
_ROUNDS = ((10, 12), (14, 16), (18, 24), (22, 32), (26, 40))
_RATIO = 0.15


def _derivative_callable(w):
    """(callable Dw, value at 0, value at 1, breakpoints) from a function object."""
    if isinstance(w, GridFunction):
        w = w.to_piecewise()
    if isinstance(w, PiecewisePoly):
        d = w.derivative()
        return d, float(w(0.0)), float(w(1.0)), w.breakpoints[1:-1]
    if isinstance(w, PowerTermSum):
        ts = w.restrict_to_unit()
        return ts.derivative(), float(ts(0.0)), float(ts(np.nextafter(1.0, 0.0))), ts.breakpoints()
    raise ParameterError(f"oracle cannot handle {type(w).__name__}")


def _flux_values(dw, bps, beta, theta, anchor, off, n_inner, w0, w1):
    """Flux at the points anchor + off (anchor a breakpoint, off exact)."""
    out = np.empty(off.size)
    g = math.gamma(beta)
    for i, (a, u) in enumerate(zip(anchor, off)):
        val = 0.0
        if theta:
            val += theta * oracle_frac_integral(dw, beta, a, n_inner, "left", bps, offset=u)
            if w0:
                val += theta * w0 * (a + u) ** (beta - 1.0) / g
        if theta != 1.0:
            val += (1.0 - theta) * oracle_frac_integral(dw, beta, a, n_inner, "right", bps, offset=u)
            if w1:
                val -= (1.0 - theta) * w1 * ((1.0 - a) - u) ** (beta - 1.0) / g
        out[i] = val
    return out


def _piece_rule(a, b, levels, n):
    """Composite rule on [a, b] graded toward both ends, as (anchor, offset, weight)."""
    half = 0.5 * (b - a)
    u, wu = composite_rule(graded_points(0.0, half, levels, _RATIO, "left"), n)
    anchor = np.concatenate([np.full(u.size, a), np.full(u.size, b)])
    return anchor, np.concatenate([u, -u]), np.concatenate([wu, wu])


def oracle_bilinear(w, v, K, beta, theta, form="B", tol=1e-10, n_inner=24):
    """Reference value of B(w, v) = (K I Dw, Dv) or A(w, v) = (K D I w, Dv).

    Outer integral: composite Gauss-Legendre graded geometrically toward every
    breakpoint of w, v and K, refined round by round until two successive
    values agree to `tol` (relative, floored at the
    rounding level of the summands). Inner integrals: oracle_frac_integral on
    the callable derivative of w. For form A the boundary terms produced by
    differentiating through nonzero traces are added explicitly.
    """
    if form not in ("A", "B"):
        raise ParameterError("form must be 'A' or 'B'")
    if form == "A" and not 0.0 < beta < 0.5:
        raise ParameterError("form A needs beta in (0, 1/2)")
    dw, w0, w1, bw = _derivative_callable(w)
    dv, _, _, bv = _derivative_callable(v)
    if form == "B":
        w0 = w1 = 0.0
    bps = np.unique(np.concatenate([bw, bv, K.breakpoints]))
    pieces = np.concatenate([[0.0], bps, [1.0]])
    prev = None
    for levels, n in _ROUNDS:
        contrib = []
        for a, b in zip(pieces[:-1], pieces[1:]):
            anchor, off, wx = _piece_rule(a, b, levels, n)
            # absolute nodes that round onto a piece end must see this piece's values
            x = np.clip(anchor + off, np.nextafter(a, b), np.nextafter(b, a))
            flux = _flux_values(dw, bw, beta, theta, anchor, off, max(n_inner, n), w0, w1)
            contrib.append(wx * K(x) * flux * dv(x))
        contrib = np.concatenate(contrib)
        val = float(np.sum(contrib))
        # relative test, with a floor at the rounding level of the summands
        floor = 1e-13 * float(np.sum(np.abs(contrib)))
        if prev is not None and abs(val - prev) <= max(tol * abs(val), floor):
            return val
        last, prev = prev, val
    raise OracleError(f"oracle quadrature did not settle (last two values {last!r}, {val!r})")
