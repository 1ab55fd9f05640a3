"""Galerkin form B(u, v) = (K I^beta_theta Du, Dv) and its loss of coercivity.

The counterexample engine builds, for any (beta, theta), a three-piece
diffusivity K and a piecewise-linear w with B(w, w) < 0.
"""

from dataclasses import dataclass, field

import numpy as np

from ._assembly import dense_solve, flux_matrix
from .classical import DiffusivityField, hat_loads
from .errors import DomainError, ParameterError, SearchFailureError
from .fracops.integrate import integrate_product
from .fracops.operators import two_sided_ts
from .fracops.special import gamma
from .fracops.terms import PiecewisePoly, as_termsum
from .spaces import FemSpace, GridFunction

_TRACE_TOL = 1e-12


def _zero_trace_ts(w, name):
    if isinstance(w, GridFunction):
        ts = w.to_termsum()
    else:
        ts = as_termsum(w).restrict_to_unit()
    scale = max(1.0, float(np.max(np.abs(ts.coeffs)))) if len(ts) else 1.0
    if abs(ts(0.0)) > _TRACE_TOL * scale or abs(ts(np.nextafter(1.0, 0.0))) > 1e-10 * scale:
        raise DomainError(f"{name} must vanish at 0 and 1")
    return ts


def _check_params(beta, theta):
    if not 0.0 < beta < 1.0:
        raise ParameterError(f"beta must lie in (0, 1), got {beta}")
    if not 0.0 <= theta <= 1.0:
        raise ParameterError(f"theta must lie in [0, 1], got {theta}")


def bilinear_B(w, v, K, beta, theta):
    """B(w, v) = int_0^1 K (I^beta_theta Dw) Dv dx, integrated exactly per cell."""
    _check_params(beta, theta)
    dw = _zero_trace_ts(w, "w").derivative()
    dv = _zero_trace_ts(v, "v").derivative()
    if len(dw) == 0 or len(dv) == 0:
        return 0.0
    flux = two_sided_ts(dw, beta, theta)
    return integrate_product(flux, dv, weight=K, extra_breaks=K.breakpoints)


def zigzag_w():
    """Piecewise-linear w: 4x on [0,1/4], 4(1/2-x) on [1/4,3/4], -4(1-x) on [3/4,1]."""
    return PiecewisePoly([0.0, 0.25, 0.75, 1.0], [[0.0, 4.0], [1.0, -4.0], [-1.0, 4.0]], continuous=True)


def zigzag_profiles(beta):
    """Closed forms (lI^beta Dw, rI^beta Dw) for w = zigzag_w()."""
    if not 0.0 < beta < 1.0:
        raise ParameterError(f"beta must lie in (0, 1), got {beta}")
    dw = zigzag_w().to_termsum().derivative()
    return dw.left_integral(beta), dw.right_integral(beta)


def lambda_beta(beta):
    """2^(1+beta) - 1 - 3^beta; vanishes at beta = 0, 1 and is positive between."""
    if not 0.0 <= beta <= 1.0:
        raise ParameterError(f"beta must lie in [0, 1], got {beta}")
    return 2.0 ** (1.0 + beta) - 1.0 - 3.0**beta


@dataclass(frozen=True, eq=False)
class CoercivityCertificate:
    """A coefficient K and a function w with B(w, w) < 0."""

    K: DiffusivityField
    w: PiecewisePoly
    value: float
    beta: float
    theta: float
    delta: float
    K_l: float
    K_r: float
    branch: str
    shrink_steps: int
    threshold: float

    def to_dict(self):
        return {
            "beta": self.beta,
            "theta": self.theta,
            "branch": self.branch,
            "delta": self.delta,
            "K_l": self.K_l,
            "K_r": self.K_r,
            "K": self.K.to_dict(),
            "shrink_steps": self.shrink_steps,
            "profile_threshold": self.threshold,
            "value": self.value,
        }


def _find_delta(profile, center, direction, threshold, n_scan=512, n_bisect=60):
    """Largest delta in (0, 1/4] with profile <= threshold on the band next to center."""
    pts = center + direction * 0.25 * np.arange(n_scan + 1) / n_scan
    ok = profile(pts) <= threshold
    if not ok[0]:
        raise SearchFailureError("profile does not reach the threshold at the anchor point")
    bad = np.flatnonzero(~ok)
    if bad.size == 0:
        return 0.25
    j = bad[0]
    lo, hi = 0.25 * (j - 1) / n_scan, 0.25 * j / n_scan
    for _ in range(n_bisect):
        mid = 0.5 * (lo + hi)
        if profile(center + direction * mid) <= threshold:
            lo = mid
        else:
            hi = mid
    if lo <= 0.0:
        # threshold only met at the anchor itself; keep the first scan cell half
        lo = 0.5 * hi
    return lo


def find_coercivity_violation(beta, theta, shrink=0.5, max_steps=60):
    """Construct K, w with B(w, w) < 0 following the three-piece construction.

    For theta <= 1/2 the two-sided profile of Dw is strongly negative just left
    of x = 1/4, where Dw = 4; a unit band there with small K elsewhere makes
    the negative contribution dominate. For theta > 1/2 the mirrored band to
    the right of x = 3/4 is used.
    """
    _check_params(beta, theta)
    lam = lambda_beta(beta)
    left, right = zigzag_profiles(beta)

    def profile(x):
        return theta * left(x) + (1.0 - theta) * right(x)

    threshold = -(4.0 ** (1.0 - beta)) * lam / (4.0 * gamma(beta + 1.0))
    w = zigzag_w()
    if theta <= 0.5:
        branch = "left"
        delta = _find_delta(profile, 0.25, -1.0, threshold)
        band = (0.25 - delta, 0.25)
    else:
        branch = "right"
        delta = _find_delta(profile, 0.75, 1.0, threshold)
        band = (0.75, 0.75 + delta)
    t = 1.0
    for step in range(max_steps + 1):
        K = _three_piece(band, t)
        value = bilinear_B(w, w, K, beta, theta)
        if value < 0.0:
            return CoercivityCertificate(K, w, value, beta, theta, delta, t, t, branch, step, threshold)
        t *= shrink
    raise SearchFailureError(f"B(w, w) still nonnegative after {max_steps} shrink steps")


def _three_piece(band, t):
    lo, hi = band
    breaks, values = [], []
    if lo > 0.0:
        breaks.append(lo)
        values.append(t)
    values.append(1.0)
    if hi < 1.0:
        breaks.append(hi)
        values.append(t)
    return DiffusivityField.piecewise_constant(breaks, values)


@dataclass(frozen=True, eq=False)
class GalerkinSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    space: FemSpace
    K: DiffusivityField
    beta: float
    theta: float
    info: dict = field(default_factory=dict)

    def symmetric_min_eig(self):
        sym = 0.5 * (self.matrix + self.matrix.T)
        return float(np.linalg.eigvalsh(sym)[0])


def assemble_galerkin(space, K, beta, theta, f=0.0, backend=None):
    """Dense Galerkin matrix B(phi_j, phi_i) and load vector <f, phi_i>."""
    _check_params(beta, theta)
    if space.boundary != "zero":
        raise ParameterError("Galerkin assembly needs the zero-trace space")
    A = flux_matrix(space, space, K, beta, theta, backend=backend)
    b = hat_loads(f, space)
    A.setflags(write=False)
    b.setflags(write=False)
    return GalerkinSystem(A, b, space, K, beta, theta)


def galerkin_solve(system):
    """Solve the dense Galerkin system; the condition estimate lands in u.info."""
    x, cond = dense_solve(system.matrix, system.rhs, "Galerkin system")
    return GridFunction(system.space, x, info={"condition_estimate": cond})


def zigzag_flux_quarter(beta, theta):
    """Closed-form two-sided profile value at x = 1/4 (theta <= 1/2 branch)."""
    return 4.0 ** (1.0 - beta) / gamma(beta + 1.0) * (
        (2.0 * theta - 1.0) + (1.0 - theta) * (1.0 + 3.0**beta - 2.0 ** (1.0 + beta))
    )


def zigzag_flux_three_quarters(beta, theta):
    """Closed-form two-sided profile value at x = 3/4."""
    return 4.0 ** (1.0 - beta) / gamma(beta + 1.0) * (
        (1.0 - 2.0 * theta) + theta * (1.0 + 3.0**beta - 2.0 ** (1.0 + beta))
    )


__all__ = [
    "CoercivityCertificate",
    "GalerkinSystem",
    "assemble_galerkin",
    "bilinear_B",
    "find_coercivity_violation",
    "galerkin_solve",
    "lambda_beta",
    "zigzag_flux_quarter",
    "zigzag_flux_three_quarters",
    "zigzag_profiles",
    "zigzag_w",
]
