"""Dense assembly of (K I^beta_theta D phi_j, D psi_i) and dense solves."""

import numpy as np
from scipy.linalg import lapack, lu_factor, lu_solve

from . import _kernels
from .errors import SolverError
from .fracops.quadrature import gauss_jacobi, gauss_legendre
from .fracops.special import gamma

COND_LIMIT = 1e14
N_QUAD = 8
N_JACOBI = 32


def flux_cell_matrix(anchors, test_nodes, K, beta, theta, n_quad=N_QUAD, backend=None):
    """W[c, k] = int_{cell c} K [theta (x - x_k)_+^b - (1 - theta)(x_k - x)_+^b] dx.

    Cells are those of `test_nodes`; anchors (trial nodes) must be a subset of
    the test nodes so no anchor falls strictly inside a cell.
    """
    test_nodes = np.asarray(test_nodes, dtype=float)
    anchors = np.asarray(anchors, dtype=float)
    sub = np.union1d(test_nodes, K.breakpoints)
    a, b = sub[:-1], sub[1:]
    h = b - a
    owner = np.searchsorted(test_nodes, a, side="right") - 1
    if K.is_piecewise_constant:
        kv = K(0.5 * (a + b))
        p = beta + 1.0
        d_a = np.maximum(a[:, None] - anchors[None, :], 0.0)
        d_b = np.maximum(b[:, None] - anchors[None, :], 0.0)
        ml = kv[:, None] * (d_b**p - d_a**p) / p
        e_a = np.maximum(anchors[None, :] - a[:, None], 0.0)
        e_b = np.maximum(anchors[None, :] - b[:, None], 0.0)
        mr = kv[:, None] * (e_a**p - e_b**p) / p
    else:
        t, w = gauss_legendre(n_quad)
        xq = a[:, None] + h[:, None] * t[None, :]
        kwq = h[:, None] * w[None, :] * K(xq)
        tl, wl = gauss_jacobi(N_JACOBI, beta, 0.0)
        tr, wr = gauss_jacobi(N_JACOBI, 0.0, beta)
        kw_left = h ** (beta + 1.0) * (K(a[:, None] + h[:, None] * tl[None, :]) @ wl)
        kw_right = h ** (beta + 1.0) * (K(a[:, None] + h[:, None] * tr[None, :]) @ wr)
        ml, mr = _kernels.flux_moments(a, b, xq, kwq, kw_left, kw_right, anchors, beta, backend=backend)
    W = theta * ml - (1.0 - theta) * mr
    out = np.zeros((test_nodes.size - 1, anchors.size))
    np.add.at(out, owner, W)
    return out


def flux_matrix(trial, test, K, beta, theta, n_quad=N_QUAD, backend=None):
    """Matrix of (K I^beta_theta D phi_j, D psi_i) for zero-trace hat spaces."""
    W = flux_cell_matrix(trial.nodes, test.nodes, K, beta, theta, n_quad, backend)
    G = test.slope_matrix()
    J = trial.jump_matrix()
    return (G.T @ W @ J.T) / gamma(beta + 1.0)


def dense_solve(matrix, rhs, what="system"):
    """LU solve with partial pivoting; returns (solution, condition estimate)."""
    A = np.asarray(matrix, dtype=float)
    if A.shape[0] == 0:
        return np.zeros(0), 1.0
    if not np.all(np.isfinite(A)):
        raise SolverError(f"{what}: matrix has non-finite entries", float("inf"))
    lu, piv = lu_factor(A, check_finite=False)
    anorm = np.max(np.sum(np.abs(A), axis=0))
    rcond, info = lapack.dgecon(lu, anorm, norm="1")
    cond = float("inf") if rcond == 0.0 else 1.0 / rcond
    if info != 0 or cond > COND_LIMIT or np.any(np.diag(lu) == 0.0):
        raise SolverError(f"{what}: matrix singular or ill-conditioned (cond ~ {cond:.3e})", cond)
    x = lu_solve((lu, piv), rhs, check_finite=False)
    return x, cond


def lstsq_solve(matrix, rhs, what="system"):
    """Least-squares solve for rectangular (refined test space) systems."""
    x, _, rank, sv = np.linalg.lstsq(matrix, rhs, rcond=None)
    cond = float(sv[0] / sv[-1]) if sv.size and sv[-1] > 0 else float("inf")
    if rank < matrix.shape[1] or cond > COND_LIMIT:
        raise SolverError(f"{what}: rank-deficient least-squares system (cond ~ {cond:.3e})", cond)
    return x, cond
