"""Hot loops: truncated-power evaluation and singular cell moments.

Each kernel has a numba implementation and a pure-numpy twin with identical
semantics. Numba is used when it imports and FRACBVP_DISABLE_NUMBA is unset
(or "0"); set FRACBVP_DISABLE_NUMBA=1 to force the numpy path.
"""

import os

import numpy as np

_EQ_TOL = 1e-14
_CHUNK = 2_000_000  # max elements of a broadcast temporary in the numpy path


def _numba_requested():
    return os.environ.get("FRACBVP_DISABLE_NUMBA", "0").strip().lower() in ("", "0", "false", "no")


try:
    if not _numba_requested():
        raise ImportError("numba disabled by FRACBVP_DISABLE_NUMBA")
    import numba
    from numba import njit, prange

    # the TBB layer shipped with some wheels is too old; OpenMP is thread-safe
    numba.config.THREADING_LAYER = "omp"
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


# ---------------------------------------------------------------- numpy path


def _term_values_np(x, anchors, sides, exps):
    """Matrix T[i, k] of term k evaluated at x[i] (truncated-power convention)."""
    d = np.where(sides[None, :] > 0, x[:, None] - anchors[None, :], anchors[None, :] - x[:, None])
    pos = d > 0
    at = np.abs(d) <= 0.0
    out = np.zeros(d.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.power(np.where(pos, d, 1.0), exps[None, :])
    out[pos] = p[pos]
    # value exactly at the anchor: Heaviside convention x >= a on the left side
    left_jump = at & (exps[None, :] == 0.0) & (sides[None, :] > 0)
    out[left_jump] = 1.0
    out[at & (exps[None, :] < 0.0)] = np.inf
    return out


def eval_terms_np(x, coeffs, anchors, sides, exps):
    x = np.ascontiguousarray(x, dtype=float).ravel()
    out = np.empty(x.size)
    step = max(1, _CHUNK // max(1, coeffs.size))
    for s in range(0, x.size, step):
        out[s:s + step] = _term_values_np(x[s:s + step], anchors, sides, exps) @ coeffs
    return out


def eval_terms_masked_np(x, cell_a, cell_b, coeffs, anchors, sides, exps):
    """Row c of x is evaluated with terms anchored at the ends of cell c removed."""
    ncell, nq = x.shape
    out = np.empty((ncell, nq))
    step = max(1, _CHUNK // max(1, coeffs.size * nq))
    for s in range(0, ncell, step):
        xa = x[s:s + step]
        a = cell_a[s:s + step, None]
        b = cell_b[s:s + step, None]
        drop = ((sides[None, :] > 0) & (np.abs(anchors[None, :] - a) <= _EQ_TOL)) | (
            (sides[None, :] < 0) & (np.abs(anchors[None, :] - b) <= _EQ_TOL)
        )
        vals = _term_values_np(xa.ravel(), anchors, sides, exps).reshape(xa.shape[0], nq, -1)
        vals = np.where(drop[:, None, :], 0.0, vals)
        out[s:s + step] = vals @ coeffs
    return out


def flux_moments_np(sub_a, sub_b, xq, kwq, kw_left, kw_right, anchors, beta):
    """Per-subcell moments of K times (x - x_k)_+^beta and (x_k - x)_+^beta.

    xq, kwq: Gauss-Legendre nodes and K-weighted weights (S x Q).
    kw_left[s], kw_right[s]: exact-weight moments used when the anchor sits at
    the subcell's left (resp. right) end.
    """
    S = sub_a.size
    A = anchors.size
    ml = np.zeros((S, A))
    mr = np.zeros((S, A))
    step = max(1, _CHUNK // max(1, A * xq.shape[1]))
    for s in range(0, S, step):
        sl = slice(s, s + step)
        a = sub_a[sl, None]
        b = sub_b[sl, None]
        d = xq[sl, :, None] - anchors[None, None, :]
        before = anchors[None, :] < a - _EQ_TOL
        after = anchors[None, :] > b + _EQ_TOL
        pl = np.power(np.where(d > 0, d, 1.0), beta)
        pr = np.power(np.where(d < 0, -d, 1.0), beta)
        ml[sl] = np.where(before, np.einsum("sq,sqa->sa", kwq[sl], pl), 0.0)
        mr[sl] = np.where(after, np.einsum("sq,sqa->sa", kwq[sl], pr), 0.0)
        at_a = np.abs(anchors[None, :] - a) <= _EQ_TOL
        at_b = np.abs(anchors[None, :] - b) <= _EQ_TOL
        ml[sl] = np.where(at_a, kw_left[sl, None], ml[sl])
        mr[sl] = np.where(at_b, kw_right[sl, None], mr[sl])
    return ml, mr


# ---------------------------------------------------------------- numba path

if HAVE_NUMBA:

    @njit(cache=True, inline="always")
    def _term_value(xv, a, side, q):
        d = xv - a if side > 0 else a - xv
        if d > 0.0:
            return d ** q
        if d == 0.0:
            if q < 0.0:
                return np.inf
            if q == 0.0 and side > 0:
                return 1.0
        return 0.0

    @njit(cache=True, parallel=True)
    def eval_terms_nb(x, coeffs, anchors, sides, exps):
        n = x.size
        out = np.empty(n)
        for i in prange(n):
            acc = 0.0
            for k in range(coeffs.size):
                acc += coeffs[k] * _term_value(x[i], anchors[k], sides[k], exps[k])
            out[i] = acc
        return out

    @njit(cache=True, parallel=True)
    def eval_terms_masked_nb(x, cell_a, cell_b, coeffs, anchors, sides, exps):
        ncell, nq = x.shape
        out = np.empty((ncell, nq))
        for c in prange(ncell):
            a = cell_a[c]
            b = cell_b[c]
            for j in range(nq):
                acc = 0.0
                for k in range(coeffs.size):
                    if sides[k] > 0 and abs(anchors[k] - a) <= _EQ_TOL:
                        continue
                    if sides[k] < 0 and abs(anchors[k] - b) <= _EQ_TOL:
                        continue
                    acc += coeffs[k] * _term_value(x[c, j], anchors[k], sides[k], exps[k])
                out[c, j] = acc
        return out

    @njit(cache=True, parallel=True)
    def flux_moments_nb(sub_a, sub_b, xq, kwq, kw_left, kw_right, anchors, beta):
        S = sub_a.size
        A = anchors.size
        nq = xq.shape[1]
        ml = np.zeros((S, A))
        mr = np.zeros((S, A))
        for s in prange(S):
            a = sub_a[s]
            b = sub_b[s]
            for k in range(A):
                xk = anchors[k]
                if abs(xk - a) <= _EQ_TOL:
                    ml[s, k] = kw_left[s]
                elif xk < a:
                    acc = 0.0
                    for j in range(nq):
                        acc += kwq[s, j] * (xq[s, j] - xk) ** beta
                    ml[s, k] = acc
                if abs(xk - b) <= _EQ_TOL:
                    mr[s, k] = kw_right[s]
                elif xk > b:
                    acc = 0.0
                    for j in range(nq):
                        acc += kwq[s, j] * (xk - xq[s, j]) ** beta
                    mr[s, k] = acc
        return ml, mr


# ---------------------------------------------------------------- dispatch


def _prep(coeffs, anchors, sides, exps):
    return (
        np.ascontiguousarray(coeffs, dtype=float),
        np.ascontiguousarray(anchors, dtype=float),
        np.ascontiguousarray(sides, dtype=np.int64),
        np.ascontiguousarray(exps, dtype=float),
    )


def eval_terms(x, coeffs, anchors, sides, exps, backend=None):
    """Evaluate sum_k c_k (truncated power k)(x) at every entry of x."""
    x = np.asarray(x, dtype=float)
    shape = x.shape
    args = _prep(coeffs, anchors, sides, exps)
    if args[0].size == 0:
        return np.zeros(shape)
    flat = np.ascontiguousarray(x.ravel())
    if _use_numba(backend):
        out = eval_terms_nb(flat, *args)
    else:
        out = eval_terms_np(flat, *args)
    return out.reshape(shape)


def eval_terms_masked(x, cell_a, cell_b, coeffs, anchors, sides, exps, backend=None):
    x = np.ascontiguousarray(x, dtype=float)
    cell_a = np.ascontiguousarray(cell_a, dtype=float)
    cell_b = np.ascontiguousarray(cell_b, dtype=float)
    args = _prep(coeffs, anchors, sides, exps)
    if args[0].size == 0:
        return np.zeros(x.shape)
    if _use_numba(backend):
        return eval_terms_masked_nb(x, cell_a, cell_b, *args)
    return eval_terms_masked_np(x, cell_a, cell_b, *args)


def flux_moments(sub_a, sub_b, xq, kwq, kw_left, kw_right, anchors, beta, backend=None):
    args = [np.ascontiguousarray(v, dtype=float) for v in (sub_a, sub_b, xq, kwq, kw_left, kw_right, anchors)]
    if _use_numba(backend):
        return flux_moments_nb(*args, float(beta))
    return flux_moments_np(*args, float(beta))


def _use_numba(backend):
    if backend is None:
        return HAVE_NUMBA
    if backend == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but unavailable")
        return True
    return False


def active_backend():
    return "numba" if HAVE_NUMBA else "numpy"


def set_threads(n):
    """Cap the number of numba worker threads (no-op on the numpy path)."""
    if HAVE_NUMBA and n:
        import numba

        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
