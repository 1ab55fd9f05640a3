"""Gauss rules on the reference interval [0, 1].

Node generation is delegated to scipy; the rules are cached because the same
few exponents recur throughout assembly.
"""

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from ..errors import ParameterError


@lru_cache(maxsize=None)
def _legendre(n):
    x, w = roots_legendre(n)
    t = 0.5 * (x + 1.0)
    t.setflags(write=False)
    w = 0.5 * w
    w.setflags(write=False)
    return t, w


def gauss_legendre(n):
    """n-point Gauss-Legendre rule on [0, 1]; returns (nodes, weights)."""
    if n < 1:
        raise ParameterError("quadrature order must be at least 1")
    return _legendre(int(n))


@lru_cache(maxsize=None)
def _jacobi(n, left_exp, right_exp):
    # scipy weight is (1-x)^alpha (1+x)^beta on [-1, 1]; t = (1+x)/2
    x, w = roots_jacobi(n, right_exp, left_exp)
    t = 0.5 * (x + 1.0)
    w = w * 2.0 ** (-(left_exp + right_exp + 1.0))
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def gauss_jacobi(n, left_exp=0.0, right_exp=0.0):
    """n-point rule on [0, 1] for the weight t^left_exp (1-t)^right_exp.

    Exponents must exceed -1. Exact for polynomials of degree 2n-1 against
    the weight.
    """
    if n < 1:
        raise ParameterError("quadrature order must be at least 1")
    if left_exp <= -1.0 or right_exp <= -1.0:
        raise ParameterError("Jacobi exponents must exceed -1")
    if left_exp == 0.0 and right_exp == 0.0:
        return _legendre(int(n))
    # round keys so that 0.30000000000000004 and 0.3 share a rule
    return _jacobi(int(n), round(float(left_exp), 14), round(float(right_exp), 14))


def graded_points(a, b, levels, ratio, toward="both"):
    """Breakpoints of [a, b] refined geometrically toward one or both ends."""
    if toward == "both":
        m = 0.5 * (a + b)
        left = graded_points(a, m, levels, ratio, "left")
        right = graded_points(m, b, levels, ratio, "right")
        return np.concatenate([left, right[1:]])
    k = ratio ** np.arange(levels, 0, -1)
    if toward == "left":
        return np.concatenate([[a], a + (b - a) * k, [b]])
    return np.concatenate([[a], b - (b - a) * k[::-1], [b]])


def composite_rule(points, n):
    """Composite Gauss-Legendre rule over consecutive breakpoints."""
    t, w = gauss_legendre(n)
    points = np.asarray(points, dtype=float)
    h = np.diff(points)
    keep = h > 0
    lo, h = points[:-1][keep], h[keep]
    x = (lo[:, None] + h[:, None] * t[None, :]).ravel()
    wx = (h[:, None] * w[None, :]).ravel()
    return x, wx
