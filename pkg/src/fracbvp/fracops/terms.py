"""Closed-form function representations on [0, 1].

A PowerTermSum is a finite sum of truncated powers

    c * (x - a)_+^q   (left-sided, anchored at a)
    c * (a - x)_+^q   (right-sided, anchored at a)

with q > -1. Piecewise polynomials, their fractional integrals, and the
fractional derivatives used throughout the package are all of this form, so
every operator below acts on the term list exactly.

At x == a a left-sided Heaviside term (q = 0) takes the value 1 and a
right-sided one takes 0, so that H(x - a) + H(a - x) == 1 everywhere.
"""

from dataclasses import dataclass
from math import comb

import numpy as np

from .. import _kernels
from ..errors import UnsupportedRepresentationError
from .special import gamma

EXP_TOL = 1e-12
ANCHOR_TOL = 1e-15
LEFT, RIGHT = 1, -1


def _is_int(q):
    return abs(q - round(q)) <= EXP_TOL


def _side_code(side):
    if side in (LEFT, "left", "l"):
        return LEFT
    if side in (RIGHT, "right", "r"):
        return RIGHT
    raise ValueError(f"unknown side {side!r}")


@dataclass(frozen=True, eq=False)
class PowerTermSum:
    """Sum of truncated powers; see the module docstring for conventions."""

    coeffs: np.ndarray
    anchors: np.ndarray
    sides: np.ndarray
    exps: np.ndarray

    def __post_init__(self):
        for name in ("coeffs", "anchors", "exps"):
            arr = np.array(getattr(self, name), dtype=float).ravel()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        sides = np.array(self.sides, dtype=np.int64).ravel()
        sides.setflags(write=False)
        object.__setattr__(self, "sides", sides)
        n = self.coeffs.size
        if not (self.anchors.size == self.sides.size == self.exps.size == n):
            raise ValueError("term arrays must have equal length")
        if n and np.any(self.exps <= -1.0):
            raise UnsupportedRepresentationError("exponents must exceed -1 (non-integrable term)")

    # -- construction -------------------------------------------------------

    @classmethod
    def from_terms(cls, terms):
        """Build from an iterable of (coeff, anchor, side, exponent)."""
        terms = list(terms)
        if not terms:
            return cls.zero()
        c, a, s, q = zip(*terms)
        return cls(c, a, [_side_code(v) for v in s], q).merged()

    @classmethod
    def zero(cls):
        return cls([], [], [], [])

    @classmethod
    def constant(cls, value):
        return cls([value], [0.0], [LEFT], [0.0]).merged()

    @classmethod
    def polynomial(cls, coeffs):
        """Polynomial sum_k coeffs[k] x^k on [0, 1], as left terms at 0."""
        coeffs = np.asarray(coeffs, dtype=float)
        k = np.arange(coeffs.size, dtype=float)
        return cls(coeffs, np.zeros(coeffs.size), np.full(coeffs.size, LEFT), k).merged()

    @property
    def terms(self):
        return [
            (float(c), float(a), "left" if s > 0 else "right", float(q))
            for c, a, s, q in zip(self.coeffs, self.anchors, self.sides, self.exps)
        ]

    def __len__(self):
        return self.coeffs.size

    def __repr__(self):
        return f"PowerTermSum({len(self)} terms)"

    # -- algebra ------------------------------------------------------------

    def merged(self):
        """Combine terms sharing side, anchor and exponent; drop zero terms."""
        n = self.coeffs.size
        if n == 0:
            return self
        order = np.lexsort((self.exps, self.anchors, self.sides))
        c, a, s, q = (v[order] for v in (self.coeffs, self.anchors, self.sides, self.exps))
        out_c, out_a, out_s, out_q = [c[0]], [a[0]], [s[0]], [q[0]]
        for i in range(1, n):
            if s[i] == out_s[-1] and abs(a[i] - out_a[-1]) <= ANCHOR_TOL and abs(q[i] - out_q[-1]) <= EXP_TOL:
                out_c[-1] += c[i]
            else:
                out_c.append(c[i])
                out_a.append(a[i])
                out_s.append(s[i])
                out_q.append(q[i])
        out_c = np.array(out_c)
        keep = out_c != 0.0
        return PowerTermSum(out_c[keep], np.array(out_a)[keep], np.array(out_s)[keep], np.array(out_q)[keep])

    def _concat(self, other, sign=1.0):
        return PowerTermSum(
            np.concatenate([self.coeffs, sign * other.coeffs]),
            np.concatenate([self.anchors, other.anchors]),
            np.concatenate([self.sides, other.sides]),
            np.concatenate([self.exps, other.exps]),
        ).merged()

    def __add__(self, other):
        if np.isscalar(other):
            other = PowerTermSum.constant(other)
        return self._concat(other)

    __radd__ = __add__

    def __sub__(self, other):
        if np.isscalar(other):
            other = PowerTermSum.constant(other)
        return self._concat(other, -1.0)

    def __neg__(self):
        return PowerTermSum(-self.coeffs, self.anchors, self.sides, self.exps)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        if scalar == 0:
            return PowerTermSum.zero()
        return PowerTermSum(scalar * self.coeffs, self.anchors, self.sides, self.exps)

    __rmul__ = __mul__

    def __call__(self, x, backend=None):
        x = np.asarray(x, dtype=float)
        out = _kernels.eval_terms(x, self.coeffs, self.anchors, self.sides, self.exps, backend=backend)
        return out if x.ndim else float(out)

    @property
    def singular_at_anchor(self):
        """True when some term is unbounded at its anchor (negative exponent)."""
        return bool(np.any(self.exps < 0.0))

    def breakpoints(self, lo=0.0, hi=1.0):
        """Sorted anchors strictly inside (lo, hi)."""
        a = np.unique(self.anchors)
        return a[(a > lo) & (a < hi)]

    # -- calculus -----------------------------------------------------------

    def derivative(self):
        """Classical derivative on (0, 1).

        Heaviside terms anchored inside (0, 1) have a distributional derivative
        and are rejected.
        """
        c, a, s, q = self.coeffs, self.anchors, self.sides, self.exps
        step = np.abs(q) <= EXP_TOL
        inside = (a > 0.0) & (a < 1.0)
        if np.any(step & inside):
            raise UnsupportedRepresentationError("derivative of a jump inside (0, 1)")
        keep = ~step
        q_new = q[keep] - 1.0
        if np.any(q_new <= -1.0):
            raise UnsupportedRepresentationError("derivative leaves the integrable range")
        return PowerTermSum(c[keep] * q[keep] * s[keep], a[keep], s[keep], q_new).merged()

    def antiderivative(self):
        """The primitive F(x) = int_0^x self, as a PowerTermSum."""
        c, a, s, q = self.coeffs, self.anchors, self.sides, self.exps
        left = s > 0
        q1 = q + 1.0
        const = np.sum(c[~left] * np.maximum(a[~left], 0.0) ** q1[~left] / q1[~left])
        coeffs = np.where(left, c / q1, -c / q1)
        out = PowerTermSum(coeffs, a, s, q1)
        return out + PowerTermSum.constant(const) if const else out.merged()

    def integral(self, lo=0.0, hi=1.0):
        F = self.antiderivative()
        return F(hi) - F(lo)

    def to_left(self):
        """Rewrite right-sided integer-exponent terms as left-sided ones."""
        return _convert(self, RIGHT)

    def to_right(self):
        """Rewrite left-sided integer-exponent terms as right-sided ones."""
        return _convert(self, LEFT)

    def left_integral(self, sigma):
        """Left Riemann-Liouville integral of order sigma > 0 (lower limit 0)."""
        ts = self.to_left()
        fac = np.array([gamma(q + 1.0) / gamma(q + 1.0 + sigma) for q in ts.exps])
        return PowerTermSum(ts.coeffs * fac, ts.anchors, ts.sides, ts.exps + sigma).merged()

    def right_integral(self, sigma):
        """Right Riemann-Liouville integral of order sigma > 0 (upper limit 1)."""
        ts = self.to_right()
        fac = np.array([gamma(q + 1.0) / gamma(q + 1.0 + sigma) for q in ts.exps])
        return PowerTermSum(ts.coeffs * fac, ts.anchors, ts.sides, ts.exps + sigma).merged()

    def multiply_poly(self, poly):
        """Product with the polynomial sum_k poly[k] x^k."""
        poly = np.trim_zeros(np.asarray(poly, dtype=float), "b")
        if poly.size == 0:
            return PowerTermSum.zero()
        out_c, out_a, out_s, out_q = [], [], [], []
        for c, a, s, q in zip(self.coeffs, self.anchors, self.sides, self.exps):
            taylor = _taylor(poly, a)
            for m, t in enumerate(taylor):
                if t == 0.0:
                    continue
                out_c.append(c * t * (1.0 if s > 0 else (-1.0) ** m))
                out_a.append(a)
                out_s.append(s)
                out_q.append(q + m)
        return PowerTermSum(out_c, out_a, out_s, out_q).merged()

    def reflect(self):
        """The function x -> self(1 - x)."""
        return PowerTermSum(self.coeffs, 1.0 - self.anchors, -self.sides, self.exps).merged()

    def restrict_to_unit(self):
        """Drop terms that vanish identically on (0, 1)."""
        dead = ((self.sides > 0) & (self.anchors >= 1.0)) | ((self.sides < 0) & (self.anchors <= 0.0))
        keep = ~dead
        return PowerTermSum(self.coeffs[keep], self.anchors[keep], self.sides[keep], self.exps[keep])

    def extend_by_zero(self):
        """Left-sided representation equal to self on [0, 1) and zero for x > 1.

        Requires integer exponents (piecewise polynomials).
        """
        ts = self.restrict_to_unit().to_left()
        if np.any([not _is_int(q) for q in ts.exps]):
            raise UnsupportedRepresentationError("zero extension needs a piecewise polynomial")
        # polynomial continuation beyond 1, re-expanded about 1
        tail = np.zeros(int(round(ts.exps.max())) + 1 if len(ts) else 1)
        for c, a, q in zip(ts.coeffs, ts.anchors, ts.exps):
            qi = int(round(q))
            for m in range(qi + 1):
                tail[m] += c * comb(qi, m) * (1.0 - a) ** (qi - m)
        cancel = PowerTermSum(-tail, np.ones(tail.size), np.full(tail.size, LEFT), np.arange(tail.size, dtype=float))
        return ts + cancel


def _taylor(poly, a):
    """Coefficients of the polynomial re-expanded in powers of (x - a)."""
    n = poly.size
    out = np.zeros(n)
    for m in range(n):
        out[m] = sum(poly[k] * comb(k, m) * a ** (k - m) for k in range(m, n))
    return out


def _convert(ts, from_side):
    """Move every term on `from_side` to the opposite side (integer exponents only)."""
    move = ts.sides == from_side
    if not np.any(move):
        return ts
    if from_side == RIGHT:
        dead = move & (ts.anchors <= 0.0)
    else:
        dead = move & (ts.anchors >= 1.0)
    out_c = list(ts.coeffs[~move])
    out_a = list(ts.anchors[~move])
    out_s = list(ts.sides[~move])
    out_q = list(ts.exps[~move])
    for c, a, q in zip(ts.coeffs[move & ~dead], ts.anchors[move & ~dead], ts.exps[move & ~dead]):
        if not _is_int(q):
            raise UnsupportedRepresentationError(
                f"cannot move a non-integer power (exponent {q}) across sides"
            )
        qi = int(round(q))
        # (a - s)^q = sum_m C(q, m) a^(q-m) (-s)^m, minus the part beyond the anchor
        base = a if from_side == RIGHT else 1.0 - a
        anchor_new = 0.0 if from_side == RIGHT else 1.0
        for m in range(qi + 1):
            out_c.append(c * comb(qi, m) * base ** (qi - m) * (-1.0) ** m)
            out_a.append(anchor_new)
            out_s.append(-from_side)
            out_q.append(float(m))
        out_c.append(-c * (-1.0) ** qi)
        out_a.append(a)
        out_s.append(-from_side)
        out_q.append(float(qi))
    return PowerTermSum(out_c, out_a, out_s, out_q).merged()


@dataclass(frozen=True, eq=False)
class PiecewisePoly:
    """Piecewise polynomial on a partition of [0, 1].

    coeffs[i, k] multiplies (x - breakpoints[i])^k on the i-th interval.
    """

    breakpoints: np.ndarray
    coeffs: np.ndarray
    continuous: bool = False

    def __post_init__(self):
        bp = np.array(self.breakpoints, dtype=float).ravel()
        co = np.atleast_2d(np.array(self.coeffs, dtype=float))
        if bp.size < 2 or bp[0] != 0.0 or bp[-1] != 1.0 or np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must increase strictly from 0 to 1")
        if co.shape[0] != bp.size - 1:
            raise ValueError("need one coefficient row per interval")
        bp.setflags(write=False)
        co.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "coeffs", co)
        if self.continuous and self.jump_size() > 1e-12:
            raise ValueError("continuity flag set but the function jumps")

    @classmethod
    def from_nodal(cls, nodes, values):
        """Continuous piecewise-linear interpolant of nodal values."""
        nodes = np.asarray(nodes, dtype=float)
        values = np.asarray(values, dtype=float)
        slopes = np.diff(values) / np.diff(nodes)
        return cls(nodes, np.column_stack([values[:-1], slopes]), continuous=True)

    @classmethod
    def polynomial(cls, poly):
        poly = np.asarray(poly, dtype=float)
        return cls([0.0, 1.0], poly[None, :], continuous=True)

    @property
    def degree(self):
        return self.coeffs.shape[1] - 1

    def _locate(self, x):
        return np.clip(np.searchsorted(self.breakpoints, x, side="right") - 1, 0, self.coeffs.shape[0] - 1)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = self._locate(x)
        t = x - self.breakpoints[idx]
        c = self.coeffs[idx]
        out = np.zeros(x.shape)
        for k in range(self.coeffs.shape[1] - 1, -1, -1):
            out = out * t + c[..., k]
        return out if x.ndim else float(out)

    def jump_size(self):
        if self.coeffs.shape[0] < 2:
            return 0.0
        h = np.diff(self.breakpoints)[:-1]
        powers = h[:, None] ** np.arange(self.coeffs.shape[1])[None, :]
        left_vals = np.sum(self.coeffs[:-1] * powers, axis=1)
        return float(np.max(np.abs(left_vals - self.coeffs[1:, 0])))

    def derivative(self):
        k = np.arange(1, self.coeffs.shape[1])
        co = self.coeffs[:, 1:] * k[None, :] if k.size else np.zeros((self.coeffs.shape[0], 1))
        return PiecewisePoly(self.breakpoints, co)

    def __add__(self, other):
        bp = np.union1d(self.breakpoints, other.breakpoints)
        return _refine(self, bp)._add_same(_refine(other, bp))

    def _add_same(self, other):
        d = max(self.coeffs.shape[1], other.coeffs.shape[1])
        a = np.zeros((self.coeffs.shape[0], d))
        a[:, : self.coeffs.shape[1]] += self.coeffs
        a[:, : other.coeffs.shape[1]] += other.coeffs
        return PiecewisePoly(self.breakpoints, a)

    def __mul__(self, scalar):
        return PiecewisePoly(self.breakpoints, scalar * self.coeffs, self.continuous)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def reflect(self):
        """x -> self(1 - x)."""
        bp = 1.0 - self.breakpoints[::-1]
        rows = []
        for i in range(self.coeffs.shape[0] - 1, -1, -1):
            # piece i lives on [b_i, b_{i+1}]; after reflection its local origin is 1 - b_{i+1}
            h = self.breakpoints[i + 1] - self.breakpoints[i]
            shifted = _taylor(self.coeffs[i], h)  # expand about the right end
            rows.append(shifted * (-1.0) ** np.arange(shifted.size))
        return PiecewisePoly(bp, np.array(rows), self.continuous)

    def to_termsum(self, extend_by_zero=False):
        """Exact truncated-power representation (left-sided terms)."""
        out_c, out_a, out_q = [], [], []
        prev = np.zeros(self.coeffs.shape[1])
        scale = float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0
        for i, b in enumerate(self.breakpoints[:-1]):
            if i == 0:
                diff = self.coeffs[0]
            else:
                # previous piece re-expanded about b
                h = b - self.breakpoints[i - 1]
                diff = self.coeffs[i] - _taylor(prev, h)
                # value jumps below roundoff are continuity, not Heaviside terms
                if self.continuous or abs(diff[0]) <= 1e-14 * scale:
                    diff[0] = 0.0
            for k, c in enumerate(diff):
                if c != 0.0:
                    out_c.append(c)
                    out_a.append(b)
                    out_q.append(float(k))
            prev = self.coeffs[i]
        ts = PowerTermSum(out_c, out_a, np.full(len(out_c), LEFT), out_q).merged()
        return ts.extend_by_zero() if extend_by_zero else ts


def _refine(pp, bp):
    """Same function on the finer breakpoint set bp (must contain pp's)."""
    idx = pp._locate(bp[:-1])
    rows = [_taylor(pp.coeffs[i], b - pp.breakpoints[i]) for i, b in zip(idx, bp[:-1])]
    return PiecewisePoly(bp, np.array(rows))


def as_termsum(w, extend_by_zero=False):
    """Coerce a PiecewisePoly, PowerTermSum or scalar constant to a PowerTermSum."""
    if isinstance(w, PowerTermSum):
        return w.extend_by_zero() if extend_by_zero else w
    if isinstance(w, PiecewisePoly):
        return w.to_termsum(extend_by_zero=extend_by_zero)
    if np.isscalar(w):
        ts = PowerTermSum.constant(float(w))
        return ts.extend_by_zero() if extend_by_zero else ts
    raise UnsupportedRepresentationError(f"cannot represent {type(w).__name__} in the term algebra")
