"""Partitions, hat-function spaces and fractional (semi)norms."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import binom

from .errors import DomainError, ParameterError
from .fracops.integrate import breakpoints_of, cell_integrals, integrate_product
from .fracops.quadrature import composite_rule
from .fracops.special import gamma
from .fracops.terms import LEFT, PiecewisePoly, PowerTermSum, as_termsum

_TAIL_TERMS = 48
_TAIL_START = 2.0


@dataclass(frozen=True, eq=False)
class Partition:
    """Nodes 0 = x_0 < ... < x_n = 1."""

    nodes: np.ndarray
    grading: str = "uniform"

    def __post_init__(self):
        x = np.array(self.nodes, dtype=float).ravel()
        if x.size < 3:
            raise ParameterError("a partition needs at least 2 cells")
        if x[0] != 0.0 or x[-1] != 1.0 or np.any(np.diff(x) <= 0.0):
            raise ParameterError("nodes must increase strictly from 0 to 1")
        x.setflags(write=False)
        object.__setattr__(self, "nodes", x)

    @property
    def n_cells(self):
        return self.nodes.size - 1

    @property
    def h(self):
        return np.diff(self.nodes)

    @property
    def h_max(self):
        return float(self.h.max())

    def refined(self, factor=2):
        """Split every cell into `factor` equal parts."""
        t = np.arange(factor) / factor
        inner = (self.nodes[:-1, None] + self.h[:, None] * t[None, :]).ravel()
        return Partition(np.concatenate([inner, [1.0]]), f"{self.grading}/refined{factor}")


def build_partition(n, grading="uniform"):
    """Uniform or graded partition of [0, 1] into n cells.

    grading: "uniform", ("graded", r), ("graded", r, end) or a dict with keys
    kind/r/end; end is "left" (x_i = (i/n)^r), "right" or "both".
    """
    if int(n) != n or n < 2:
        raise ParameterError(f"need at least 2 cells, got {n}")
    n = int(n)
    kind, r, end = _parse_grading(grading)
    t = np.arange(n + 1) / n
    if kind == "uniform":
        return Partition(t, "uniform")
    if end == "left":
        x = t**r
    elif end == "right":
        x = 1.0 - (1.0 - t) ** r
    else:
        x = np.where(t <= 0.5, 0.5 * (2.0 * t) ** r, 1.0 - 0.5 * (2.0 - 2.0 * t) ** r)
    x[0], x[-1] = 0.0, 1.0
    return Partition(x, f"graded({r:g},{end})")


def _parse_grading(grading):
    if grading in (None, "uniform"):
        return "uniform", 1.0, "left"
    if isinstance(grading, dict):
        kind = grading.get("kind", "uniform")
        r = float(grading.get("r", 1.0))
        end = grading.get("end", "left")
    else:
        kind, r = grading[0], float(grading[1])
        end = grading[2] if len(grading) > 2 else "left"
    if kind == "uniform":
        return "uniform", 1.0, "left"
    if kind != "graded" or r < 1.0 or end not in ("left", "right", "both"):
        raise ParameterError(f"invalid grading {grading!r}")
    return kind, r, end


@dataclass(frozen=True, eq=False)
class FemSpace:
    """Continuous piecewise-linear functions on a partition."""

    partition: Partition
    degree: int = 1
    boundary: str = "zero"

    def __post_init__(self):
        if self.degree != 1:
            raise ParameterError("only degree 1 (hat functions) is implemented")
        if self.boundary not in ("zero", "free"):
            raise ParameterError("boundary must be 'zero' or 'free'")

    @property
    def nodes(self):
        return self.partition.nodes

    @property
    def dof_nodes(self):
        """Indices of the nodes carrying a degree of freedom."""
        n = self.partition.n_cells
        return np.arange(1, n) if self.boundary == "zero" else np.arange(n + 1)

    @property
    def dof_count(self):
        return self.dof_nodes.size

    def slope_matrix(self):
        """G[c, i]: derivative of basis function i on cell c."""
        n = self.partition.n_cells
        h = self.partition.h
        G = np.zeros((n, self.dof_count))
        for i, k in enumerate(self.dof_nodes):
            if k > 0:
                G[k - 1, i] = 1.0 / h[k - 1]
            if k < n:
                G[k, i] = -1.0 / h[k]
        return G

    def jump_matrix(self):
        """J[i, k]: jump of the derivative of basis function i at node k.

        Each zero-trace hat equals sum_k J[i, k] (x - x_k)_+ on (0, 1), and its
        derivative is sum_k J[i, k] H(x - x_k).
        """
        if self.boundary != "zero":
            raise ParameterError("jump representation is defined for the zero-trace space")
        n = self.partition.n_cells
        h = self.partition.h
        J = np.zeros((self.dof_count, n + 1))
        for i, k in enumerate(self.dof_nodes):
            J[i, k - 1] = 1.0 / h[k - 1]
            J[i, k] = -1.0 / h[k - 1] - 1.0 / h[k]
            J[i, k + 1] = 1.0 / h[k]
        return J

    def function(self, coefficients):
        return GridFunction(self, coefficients)

    def interpolate(self, f):
        """Nodal interpolant of a callable (boundary values dropped for zero trace)."""
        vals = np.asarray(f(self.nodes[self.dof_nodes]), dtype=float)
        return GridFunction(self, np.broadcast_to(vals, (self.dof_count,)).copy())


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Coefficient vector over a FemSpace basis."""

    space: FemSpace
    coefficients: np.ndarray = field(repr=False)
    info: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float).ravel()
        if c.size != self.space.dof_count:
            raise ParameterError(f"expected {self.space.dof_count} coefficients, got {c.size}")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    def nodal_values(self):
        v = np.zeros(self.space.nodes.size)
        v[self.space.dof_nodes] = self.coefficients
        return v

    def to_piecewise(self):
        return PiecewisePoly.from_nodal(self.space.nodes, self.nodal_values())

    def to_termsum(self, extend_by_zero=False):
        return self.to_piecewise().to_termsum(extend_by_zero=extend_by_zero)

    def __call__(self, x):
        return np.interp(x, self.space.nodes, self.nodal_values())

    def __add__(self, other):
        return GridFunction(self.space, self.coefficients + other.coefficients)

    def __neg__(self):
        return GridFunction(self.space, -self.coefficients)

    def __sub__(self, other):
        return self + (-other)


def hat_basis(space):
    """Basis functions of a degree-1 space as PiecewisePoly objects."""
    nodes = space.nodes
    out = []
    for k in space.dof_nodes:
        vals = np.zeros(nodes.size)
        vals[k] = 1.0
        out.append(PiecewisePoly.from_nodal(nodes, vals))
    return out


def _as_ts(w):
    if isinstance(w, GridFunction):
        return w.to_termsum()
    return as_termsum(w)


def l2_inner(w, v, quad_order=8):
    """L2(0, 1) inner product; Jacobi rules take over at singular anchors."""
    if quad_order < 1:
        raise ParameterError("quad_order must be positive")
    return integrate_product(_as_ts(w), _as_ts(v), n_smooth=quad_order)


def l2_norm(w, quad_order=16):
    return math.sqrt(max(l2_inner(w, w, quad_order), 0.0))


def _derivative_data(w):
    ts = _as_ts(w).restrict_to_unit()
    scale = max(1.0, float(np.max(np.abs(ts.coeffs)))) if len(ts) else 1.0
    if abs(ts(0.0)) > 1e-12 * scale or abs(ts(np.nextafter(1.0, 0.0))) > 1e-10 * scale:
        raise DomainError("the J-seminorm needs w(0) = w(1) = 0")
    return ts.derivative()


def left_derivative_l2_sq(w, mu, domain="line"):
    """||lD^mu w||^2 over the real line (w extended by zero) or over (0, 1)."""
    if not 0.0 < mu < 1.0:
        raise ParameterError(f"mu must lie in (0, 1), got {mu}")
    sigma = 1.0 - mu
    g = _derivative_data(w)
    if len(g) == 0:
        return 0.0
    inside = _norm_sq_on(g.left_integral(sigma), breakpoints_of(g))
    if domain == "interval":
        return inside
    if domain != "line":
        raise ParameterError("domain must be 'line' or 'interval'")
    return inside + _tail_sq(g, sigma)


def _norm_sq_on(ts, points):
    return float(np.sum(cell_integrals(ts, ts, points=points)))


def _tail_sq(g, sigma):
    """int_1^inf (lI^sigma g)^2 for g supported in [0, 1]."""
    g_ext = g.extend_by_zero()
    bps = breakpoints_of(g)
    h_last = 1.0 - (bps[-2] if bps.size > 2 else 0.0)
    # geometric cells toward x = 1 keep the nearby anchors resolved
    levels = max(1, int(math.ceil(math.log2(2.0 / h_last))) + 1)
    pts = 1.0 + np.concatenate([[0.0], 2.0 ** -np.arange(levels, -1, -1)])
    near = _norm_sq_on(g_ext.left_integral(sigma), pts * (_TAIL_START - 1.0) + (2.0 - _TAIL_START))
    # multipole expansion of the kernel for x >= _TAIL_START
    x, w = composite_rule(bps, 40)
    gx = g(x) * w
    k = np.arange(_TAIL_TERMS)
    moments = np.array([np.sum(gx * x**j) for j in k])
    a = binom(sigma - 1.0, k) * (-1.0) ** k * moments / gamma(sigma)
    kk = k[:, None] + k[None, :]
    expo = kk + 1.0 - 2.0 * sigma
    if sigma >= 0.5:
        a[0] = 0.0  # the zeroth moment is w(1) - w(0) = 0
        expo = np.where(expo > 0, expo, 1.0)
    far = float(np.sum(np.outer(a, a) * _TAIL_START ** (-expo) / expo))
    return near + far


def j_seminorm(w, mu, side="left", theta=None, domain="line"):
    """Fractional seminorm |w|_{J^mu} of a function vanishing at 0 and 1.

    side: "left", "right" or "two_sided" (with theta), the last being
    sqrt(theta^2 |w|_left^2 + (1 - theta)^2 |w|_right^2). With domain="line"
    the fractional derivative of the zero extension is measured on the whole
    real line; domain="interval" restricts the L2 norm to (0, 1).
    """
    if side == "left":
        return math.sqrt(max(left_derivative_l2_sq(w, mu, domain), 0.0))
    if side == "right":
        return math.sqrt(max(left_derivative_l2_sq(_as_ts(w).reflect(), mu, domain), 0.0))
    if side in ("two_sided", "two-sided"):
        if theta is None or not 0.0 <= theta <= 1.0:
            raise ParameterError("two-sided seminorm needs theta in [0, 1]")
        ts = _as_ts(w)
        left = left_derivative_l2_sq(ts, mu, domain) if theta else 0.0
        right = left_derivative_l2_sq(ts.reflect(), mu, domain) if theta != 1.0 else 0.0
        return math.sqrt(max(theta**2 * left + (1.0 - theta) ** 2 * right, 0.0))
    raise ParameterError(f"unknown side {side!r}")


def energy_error(w_h, w_exact, mu, side="left", domain="line"):
    """J-seminorm of w_h - w_exact at order mu."""
    diff = _as_ts(w_h) - _as_ts(w_exact)
    return j_seminorm(diff, mu, side=side, domain=domain)


def interpolant(space, w):
    """Nodal interpolant of a term sum, piecewise polynomial or callable."""
    f = w if callable(w) else _as_ts(w)
    return space.interpolate(f)
