"""Second-order diffusion problems -D(K Dw) = f with Dirichlet data.

Provides the diffusivity field K and the three profiles that drive the
characterization machinery: the K-harmonic functions w_l (1 at x=0, 0 at
x=1) and w_r = 1 - w_l, and the forced profile w_f with zero boundary
values.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import DomainError, ParameterError, SolverError, UnsupportedRepresentationError
from .fracops.integrate import breakpoints_of, cell_integrals
from .fracops.quadrature import gauss_legendre
from .fracops.terms import PiecewisePoly, PowerTermSum, as_termsum

_N_SAMPLES = 2001
_R_CELLS = 64
_R_ORDER = 20


@dataclass(frozen=True, eq=False)
class DiffusivityField:
    """Coefficient K(x) on [0, 1].

    kind "constant": values = (c,)
    kind "piecewise_constant": breaks strictly inside (0, 1), one value per piece
    kind "polynomial": coeffs of sum_k c_k x^k
    kind "tabulated": values at nodes; 1/K is interpolated linearly
    """

    kind: str
    values: tuple = ()
    breaks: tuple = ()
    coeffs: tuple = ()
    nodes: tuple = ()

    def __post_init__(self):
        for name in ("values", "breaks", "coeffs", "nodes"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        k = self.kind
        if k == "constant":
            if len(self.values) != 1:
                raise ParameterError("constant K needs exactly one value")
        elif k == "piecewise_constant":
            b = np.array(self.breaks)
            if len(self.values) != b.size + 1:
                raise ParameterError("piecewise-constant K needs len(breaks) + 1 values")
            if b.size and (b[0] <= 0.0 or b[-1] >= 1.0 or np.any(np.diff(b) <= 0.0)):
                raise ParameterError("breaks must increase strictly inside (0, 1)")
        elif k == "polynomial":
            if not self.coeffs:
                raise ParameterError("polynomial K needs coefficients")
        elif k == "tabulated":
            x = np.array(self.nodes)
            if x.size < 2 or x[0] != 0.0 or x[-1] != 1.0 or np.any(np.diff(x) <= 0.0):
                raise ParameterError("tabulated K needs increasing nodes from 0 to 1")
            if len(self.values) != x.size:
                raise ParameterError("tabulated K needs one value per node")
        else:
            raise ParameterError(f"unknown diffusivity kind {k!r}")
        lo, hi = self.bounds
        if not (lo > 0.0 and np.isfinite(hi)):
            raise DomainError(f"K must be bounded away from zero (sampled range [{lo}, {hi}])")

    # -- constructors --------------------------------------------------------

    @classmethod
    def constant(cls, c):
        return cls("constant", values=(c,))

    @classmethod
    def piecewise_constant(cls, breaks, values):
        return cls("piecewise_constant", values=tuple(values), breaks=tuple(breaks))

    @classmethod
    def polynomial(cls, coeffs):
        return cls("polynomial", coeffs=tuple(coeffs))

    @classmethod
    def tabulated(cls, nodes, values):
        return cls("tabulated", values=tuple(values), nodes=tuple(nodes))

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "constant":
            d["value"] = self.values[0]
        elif self.kind == "piecewise_constant":
            d["breaks"] = list(self.breaks)
            d["values"] = list(self.values)
        elif self.kind == "polynomial":
            d["coeffs"] = list(self.coeffs)
        else:
            d["nodes"] = list(self.nodes)
            d["values"] = list(self.values)
        return d

    @classmethod
    def from_dict(cls, d):
        kind = d.get("kind")
        if kind == "constant":
            return cls.constant(d["value"])
        if kind == "piecewise_constant":
            return cls.piecewise_constant(d.get("breaks", []), d["values"])
        if kind == "polynomial":
            return cls.polynomial(d["coeffs"])
        if kind == "tabulated":
            return cls.tabulated(d["nodes"], d["values"])
        raise ParameterError(f"unknown diffusivity kind {kind!r}")

    # -- evaluation ------------------------------------------------------------

    @property
    def is_piecewise_constant(self):
        return self.kind in ("constant", "piecewise_constant")

    @property
    def is_constant(self):
        if self.kind == "constant":
            return True
        if self.kind == "piecewise_constant":
            return len(set(self.values)) == 1
        if self.kind == "polynomial":
            return all(c == 0.0 for c in self.coeffs[1:])
        return len(set(self.values)) == 1

    @property
    def breakpoints(self):
        """Points inside (0, 1) where K is not smooth."""
        if self.kind == "piecewise_constant":
            return np.array(self.breaks)
        if self.kind == "tabulated":
            return np.array(self.nodes[1:-1])
        return np.zeros(0)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            out = np.full(x.shape, self.values[0])
        elif self.kind == "piecewise_constant":
            out = np.asarray(self.values)[np.searchsorted(self.breaks, x, side="right")]
        elif self.kind == "polynomial":
            out = np.polynomial.polynomial.polyval(x, self.coeffs)
        else:
            out = 1.0 / self.inv(x)
        return out if x.ndim else float(out)

    def inv(self, x):
        """1/K(x); for tabulated K this is the piecewise-linear interpolant."""
        x = np.asarray(x, dtype=float)
        if self.kind == "tabulated":
            out = np.interp(x, self.nodes, 1.0 / np.asarray(self.values))
        else:
            out = 1.0 / self(x)
        return out if x.ndim else float(out)

    @property
    def bounds(self):
        """(K_m, K_M) estimated on a dense sample plus all breakpoints."""
        x = np.unique(np.concatenate([np.linspace(0.0, 1.0, _N_SAMPLES), self.breakpoints]))
        if self.kind == "piecewise_constant":
            v = np.asarray(self.values)
            return float(v.min()), float(v.max())
        k = self(x)
        return float(np.min(k)), float(np.max(k))

    def poly_coeffs(self):
        """Monomial coefficients when K is a polynomial (constants included)."""
        if self.kind == "constant":
            return np.array(self.values)
        if self.kind == "polynomial":
            return np.array(self.coeffs)
        if self.is_constant:
            return np.array(self.values[:1])
        raise UnsupportedRepresentationError(f"{self.kind} K is not a polynomial")

    def inv_derivative(self, x, k):
        """k-th derivative of 1/K (a.e. for piecewise representations)."""
        x = np.asarray(x, dtype=float)
        if k == 0:
            return self.inv(x)
        if self.kind in ("constant", "piecewise_constant"):
            return np.zeros(x.shape)
        if self.kind == "tabulated":
            if k > 1:
                return np.zeros(x.shape)
            nodes = np.asarray(self.nodes)
            slopes = np.diff(1.0 / np.asarray(self.values)) / np.diff(nodes)
            return slopes[np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, slopes.size - 1)]
        # Leibniz on K * (1/K) = 1
        P = np.polynomial.polynomial
        kd = [P.polyval(x, P.polyder(self.coeffs, j)) if j else P.polyval(x, self.coeffs) for j in range(k + 1)]
        h = [1.0 / kd[0]]
        for n in range(1, k + 1):
            acc = sum(math.comb(n, j) * kd[j] * h[n - j] for j in range(1, n + 1))
            h.append(-acc / kd[0])
        return h[k]

    def scaled(self, c):
        if self.kind == "polynomial":
            return DiffusivityField.polynomial([c * v for v in self.coeffs])
        return DiffusivityField(self.kind, [c * v for v in self.values], self.breaks, (), self.nodes)

    def cell_values(self, points):
        """Mean of K over each cell of `points` (exact for piecewise-constant K)."""
        points = np.asarray(points, dtype=float)
        sub = np.union1d(points, self.breakpoints)
        vals = cell_integrals(PowerTermSum.constant(1.0), None, self, sub, n_smooth=_R_ORDER)
        owner = np.searchsorted(points, sub[:-1], side="right") - 1
        out = np.zeros(points.size - 1)
        np.add.at(out, owner, vals)
        return out / np.diff(points)

    # -- resistivity integral R(x) = int_0^x 1/K ---------------------------------

    def resistivity(self, x):
        """R(x) = int_0^x ds / K(s), exact for piecewise-constant and tabulated K."""
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            out = x / self.values[0]
        elif self.kind == "piecewise_constant":
            pts = np.concatenate([[0.0], self.breaks, [1.0]])
            cum = np.concatenate([[0.0], np.cumsum(np.diff(pts) / np.asarray(self.values))])
            i = np.clip(np.searchsorted(pts, x, side="right") - 1, 0, len(self.values) - 1)
            out = cum[i] + (x - pts[i]) / np.asarray(self.values)[i]
        elif self.kind == "tabulated":
            pts = np.asarray(self.nodes)
            r = 1.0 / np.asarray(self.values)
            cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(pts) * (r[1:] + r[:-1]))])
            i = np.clip(np.searchsorted(pts, x, side="right") - 1, 0, pts.size - 2)
            d = x - pts[i]
            slope = (r[i + 1] - r[i]) / (pts[i + 1] - pts[i])
            out = cum[i] + d * r[i] + 0.5 * slope * d * d
        else:
            out = self._resistivity_quad(x)
        return out if x.ndim else float(out)

    def _resistivity_quad(self, x):
        grid = np.linspace(0.0, 1.0, _R_CELLS + 1)
        t, w = gauss_legendre(_R_ORDER)
        h = grid[1] - grid[0]
        cell = h * (self.inv(grid[:-1, None] + h * t[None, :]) @ w)
        cum = np.concatenate([[0.0], np.cumsum(cell)])
        xf = x.ravel()
        i = np.clip(np.searchsorted(grid, xf, side="right") - 1, 0, _R_CELLS - 1)
        d = xf - grid[i]
        part = d * (self.inv(grid[i, None] + d[:, None] * t[None, :]) @ w)
        return (cum[i] + part).reshape(x.shape)

    @property
    def total_resistivity(self):
        return float(self.resistivity(1.0))


@dataclass(frozen=True, eq=False)
class HarmonicProfile:
    """w_r(x) = R(x)/R(1) (side="right") or w_l = 1 - w_r (side="left")."""

    K: DiffusivityField
    side: str

    @property
    def total(self):
        return self.K.total_resistivity

    def resistivity_integral(self, x):
        return self.K.resistivity(x)

    def __call__(self, x):
        r = self.K.resistivity(x)
        R1 = self.total
        return r / R1 if self.side == "right" else (R1 - r) / R1

    def derivative(self, x, k=1):
        """k-th derivative (k >= 1 uses D w_r = 1/(K R(1)))."""
        if k == 0:
            return self(x)
        d = self.K.inv_derivative(x, k - 1) / self.total
        return d if self.side == "right" else -d

    def as_piecewise(self):
        """Exact piecewise-linear form, available for piecewise-constant K."""
        if not self.K.is_piecewise_constant:
            raise UnsupportedRepresentationError("closed form needs piecewise-constant K")
        pts = np.concatenate([[0.0], self.K.breakpoints, [1.0]])
        return PiecewisePoly.from_nodal(pts, self(pts))


def solve_wl_wr(K):
    """The K-harmonic profiles (w_l, w_r) with w_l(0) = w_r(1) = 1."""
    if not isinstance(K, DiffusivityField):
        raise ParameterError("K must be a DiffusivityField")
    return HarmonicProfile(K, "left"), HarmonicProfile(K, "right")


@dataclass(frozen=True, eq=False)
class ForcingProfile:
    """w_f(x) = int_0^x (c - F(s))/K(s) ds with F = int_0 f and w_f(1) = 0."""

    K: DiffusivityField
    f: PowerTermSum
    F: PowerTermSum
    c: float

    def _breaks(self, x):
        return breakpoints_of(self.F, extra=np.concatenate([self.K.breakpoints, np.ravel(x)]))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        xs = np.clip(x.ravel(), 0.0, 1.0)
        pts = self._breaks(xs)
        vals = cell_integrals(self.F, None, self.K.inv, pts)
        cum = np.concatenate([[0.0], np.cumsum(vals)])
        G = cum[np.searchsorted(pts, xs)]
        out = (self.c * self.K.resistivity(xs) - G).reshape(x.shape)
        return out if x.ndim else float(out)

    def derivative(self, x, k=1):
        """D^k w_f = D^(k-1)[(c - F)/K] via the Leibniz rule."""
        x = np.asarray(x, dtype=float)
        if k == 0:
            return self(x)
        total = np.zeros(x.shape)
        g = self.F
        for j in range(k):
            if j == 0:
                gj = self.c - self.F(x)
            else:
                g = self.f if j == 1 else g.derivative()
                gj = -g(x)
            total = total + math.comb(k - 1, j) * gj * self.K.inv_derivative(x, k - 1 - j)
        return total


def solve_wf(K, f):
    """Profile w_f solving -D(K Dw) = f, w(0) = w(1) = 0, by double integration."""
    f = as_termsum(f).restrict_to_unit()
    F = f.antiderivative()
    pts = breakpoints_of(F, extra=K.breakpoints)
    G1 = float(np.sum(cell_integrals(F, None, K.inv, pts)))
    R1 = K.total_resistivity
    if not np.isfinite(G1) or R1 <= 0.0:
        raise SolverError(f"quadrature of F/K failed (value {G1}, R(1) = {R1})")
    return ForcingProfile(K, f, F, G1 / R1)


def hat_loads(f, space):
    """Load vector <f, phi_i> for the hats of a degree-1 space."""
    f = as_termsum(f).restrict_to_unit()
    nodes = space.nodes
    pts = np.union1d(nodes, f.breakpoints())
    m0 = cell_integrals(f, None, None, pts)
    mx = cell_integrals(f, PowerTermSum.polynomial([0.0, 1.0]), None, pts)
    owner = np.searchsorted(nodes, pts[:-1], side="right") - 1
    n = nodes.size - 1
    c0 = np.zeros(n)
    cx = np.zeros(n)
    np.add.at(c0, owner, m0)
    np.add.at(cx, owner, mx)
    h = np.diff(nodes)
    rise = (cx - nodes[:-1] * c0) / h  # int f (x - x_c)/h over cell c
    fall = c0 - rise  # int f (x_{c+1} - x)/h
    b = np.zeros(n + 1)
    b[1:] += rise
    b[:-1] += fall
    return b[space.dof_nodes]


def fem_second_order(K, f, space):
    """Hat-function FEM for (K Dw, Dv) = <f, v> on a zero-trace space."""
    from .spaces import GridFunction

    if space.boundary != "zero":
        raise ParameterError("fem_second_order needs the zero-trace space")
    h = space.partition.h
    kc = K.cell_values(space.nodes) / h  # int_cell K / h^2 * h
    n = space.dof_count
    diag = kc[:-1] + kc[1:]
    off = -kc[1:-1]
    ab = np.zeros((3, n))
    ab[0, 1:] = off
    ab[1] = diag
    ab[2, :-1] = off
    rhs = hat_loads(f, space)
    try:
        u = solve_banded((1, 1), ab, rhs)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - SPD for valid K
        raise SolverError(f"tridiagonal solve failed: {exc}") from exc
    return GridFunction(space, u)
