"""Integration of products of PowerTermSums over a partition.

On each cell [a, b] a term sum splits into terms singular at a (left-sided,
anchored at a), terms singular at b (right-sided, anchored at b) and a
remainder that is smooth on the closed cell. Singular-singular products are
integrated in closed form (or with a Jacobi rule when a weight is present),
singular-smooth products with Gauss-Jacobi rules for the singular exponent,
and smooth-smooth products with Gauss-Legendre.
"""

from collections import defaultdict

import numpy as np

from .. import _kernels
from .quadrature import gauss_jacobi, gauss_legendre
from .special import beta_fn
from .terms import PowerTermSum, as_termsum

N_SMOOTH = 16
N_SINGULAR = 32


def breakpoints_of(*funcs, lo=0.0, hi=1.0, extra=()):
    """Sorted cell boundaries: lo, hi and every anchor strictly inside."""
    pts = [np.array([lo, hi])]
    for f in funcs:
        if f is not None:
            pts.append(f.breakpoints(lo, hi))
    extra = np.asarray(extra, dtype=float)
    pts.append(extra[(extra > lo) & (extra < hi)])
    return np.unique(np.concatenate(pts))


class _Split:
    """Classification of one term sum against a cell partition."""

    def __init__(self, ts, a, b):
        self.ts = ts
        # singular-at-left-end terms grouped by cell
        self.left = defaultdict(list)
        self.right = defaultdict(list)
        if len(ts) == 0:
            return
        ia = np.searchsorted(a, ts.anchors)
        ib = np.searchsorted(b, ts.anchors)
        for k, (c, anc, s, q) in enumerate(zip(ts.coeffs, ts.anchors, ts.sides, ts.exps)):
            if s > 0 and ia[k] < a.size and a[ia[k]] == anc:
                self.left[ia[k]].append((c, q))
            elif s < 0 and ib[k] < b.size and b[ib[k]] == anc:
                self.right[ib[k]].append((c, q))

    def smooth(self, x, a_rows, b_rows):
        t = self.ts
        return _kernels.eval_terms_masked(x, a_rows, b_rows, t.coeffs, t.anchors, t.sides, t.exps)


def balanced(points, ratio=2.0):
    """Refine cells that dwarf a neighbour by geometric subdivision.

    Anchors sit at cell ends; a term anchored at a neighbouring node is smooth
    on the cell but nearly singular if that neighbour is much shorter. After
    balancing, every such singularity lies at least half a cell away.
    """
    points = np.asarray(points, dtype=float)
    h = np.diff(points)
    if h.size < 2:
        return points
    hl = np.concatenate([[np.inf], h[:-1]])
    hr = np.concatenate([h[1:], [np.inf]])
    bad = np.flatnonzero((h > ratio * hl) | (h > ratio * hr))
    if bad.size == 0:
        return points
    extra = []
    for i in bad:
        a, b = points[i], points[i + 1]
        m = 0.5 * (a + b)
        if h[i] > ratio * hl[i]:
            k = hl[i] * ratio ** np.arange(64)
            extra.append(a + k[a + k < m])
        if h[i] > ratio * hr[i]:
            k = hr[i] * ratio ** np.arange(64)
            extra.append(b - k[b - k > m])
    return np.unique(np.concatenate([points] + extra))


def cell_integrals(F, G=None, weight=None, points=None, n_smooth=N_SMOOTH, n_singular=N_SINGULAR):
    """Per-cell integrals of F * G * weight over consecutive `points`.

    F and G are PowerTermSums (or anything `as_termsum` accepts); G=None means
    G == 1. `weight` is a vectorized callable, smooth on every cell. When
    `points` is None the partition is [0, 1] split at all anchors. Cells are
    balanced internally (see `balanced`) and the results summed back.
    """
    F = as_termsum(F)
    G = PowerTermSum.constant(1.0) if G is None else as_termsum(G)
    if points is None:
        points = breakpoints_of(F, G)
    points = np.asarray(points, dtype=float)
    fine = balanced(points)
    vals = _cell_integrals(F, G, weight, fine, n_smooth, n_singular)
    if fine.size == points.size:
        return vals
    owner = np.searchsorted(points, fine[:-1], side="right") - 1
    out = np.zeros(points.size - 1)
    np.add.at(out, owner, vals)
    return out


def _cell_integrals(F, G, weight, points, n_smooth, n_singular):
    a, b = points[:-1], points[1:]
    h = b - a
    ncell = a.size
    sf, sg = _Split(F, a, b), _Split(G, a, b)
    out = np.zeros(ncell)

    def wt(x):
        return 1.0 if weight is None else weight(x)

    # smooth x smooth: Gauss-Legendre
    t, w = gauss_legendre(n_smooth)
    x = a[:, None] + h[:, None] * t[None, :]
    vals = sf.smooth(x, a, b) * sg.smooth(x, a, b) * wt(x)
    out += h * (vals @ w)

    # singular x smooth, for each factor in turn
    for sing, other in ((sf, sg), (sg, sf)):
        _singular_smooth(sing, other, a, b, h, wt, n_singular, out)

    # singular x singular
    cells = set(sf.left) | set(sf.right)
    for c in cells & (set(sg.left) | set(sg.right)):
        out[c] += _singular_pair(sf, sg, c, a[c], h[c], weight, n_singular)
    return out


def _singular_smooth(sing, other, a, b, h, wt, n, out):
    rows, xs, ws = [], [], []
    for end, groups in (("left", sing.left), ("right", sing.right)):
        for c, terms in groups.items():
            for coef, q in terms:
                if end == "left":
                    t, w = gauss_jacobi(n, q, 0.0)
                else:
                    t, w = gauss_jacobi(n, 0.0, q)
                rows.append(c)
                xs.append(a[c] + h[c] * t)
                ws.append(coef * h[c] ** (q + 1.0) * w)
    if not rows:
        return
    rows = np.array(rows)
    x = np.array(xs)
    vals = other.smooth(x, a[rows], b[rows]) * wt(x)
    np.add.at(out, rows, np.sum(vals * np.array(ws), axis=1))


def _singular_pair(sf, sg, c, a, h, weight, n):
    total = 0.0
    for ef, tf in (("left", sf.left.get(c, ())), ("right", sf.right.get(c, ()))):
        for eg, tg in (("left", sg.left.get(c, ())), ("right", sg.right.get(c, ()))):
            for cf, qf in tf:
                for cg, qg in tg:
                    if ef == eg:
                        q = qf + qg
                        if weight is None:
                            val = h ** (q + 1.0) / (q + 1.0)
                        else:
                            t, w = gauss_jacobi(n, q, 0.0) if ef == "left" else gauss_jacobi(n, 0.0, q)
                            val = h ** (q + 1.0) * np.dot(w, weight(a + h * t))
                    else:
                        ql, qr = (qf, qg) if ef == "left" else (qg, qf)
                        if weight is None:
                            val = h ** (ql + qr + 1.0) * beta_fn(ql + 1.0, qr + 1.0)
                        else:
                            t, w = gauss_jacobi(n, ql, qr)
                            val = h ** (ql + qr + 1.0) * np.dot(w, weight(a + h * t))
                    total += cf * cg * val
    return total


def integrate_product(F, G=None, weight=None, points=None, extra_breaks=(), **kw):
    """Integral over [0, 1] (or the span of `points`) of F * G * weight."""
    if points is None:
        F = as_termsum(F)
        G = None if G is None else as_termsum(G)
        points = breakpoints_of(F, G, extra=extra_breaks)
    return float(np.sum(cell_integrals(F, G, weight, points, **kw)))


def l2_norm(F, weight=None, points=None, extra_breaks=(), **kw):
    val = integrate_product(F, F, weight, points, extra_breaks, **kw)
    return float(np.sqrt(max(val, 0.0)))
