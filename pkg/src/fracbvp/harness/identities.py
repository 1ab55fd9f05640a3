"""Executable checks of the fractional-calculus identities the theory rests on.

Every check compares two routes to the same quantity and records the
measured defect against its tolerance; failures are report entries, never
exceptions. Inequalities whose constants are not explicit (Poincare,
equivalence of the one- and two-sided seminorms) are checked as sanity
conditions: ratios finite, positive and ordered.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ..fracops import (
    PiecewisePoly,
    PowerTermSum,
    as_termsum,
    caputo_left,
    caputo_right,
    integrate_product,
    oracle_frac_integral,
)
from ..fracops.special import gamma
from ..spaces import j_seminorm, l2_norm

TOL = {
    "gamma_reference": 1e-13,
    "power_rule": 1e-10,
    "power_rule_oracle": 1e-10,
    "semigroup": 1e-8,
    "adjoint": 1e-8,
    "commutation": 1e-10,
    "cos_identity": 1e-3,
    "seminorm_equality": 1e-8,
    "mirror": 1e-12,
}

DEFAULT_BETAS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
DEFAULT_MUS = (0.6, 0.75, 0.9)


def default_battery():
    """Functions vanishing at 0 and 1: polynomials and a kinked hat."""
    P = PowerTermSum.polynomial
    return {
        "x(1-x)": P([0.0, 1.0, -1.0]),
        "x^2(1-x)": P([0.0, 0.0, 1.0, -1.0]),
        "x(1-x)^2": P([0.0, 1.0, -2.0, 1.0]),
        "x^2(1-x)^2": P([0.0, 0.0, 1.0, -2.0, 1.0]),
        "hat(0.3)": PiecewisePoly.from_nodal([0.0, 0.3, 1.0], [0.0, 1.0, 0.0]).to_termsum(),
    }


@dataclass
class IdentityReport:
    entries: list = field(default_factory=list)

    def add(self, name, params, defect, tol, passed=None):
        defect = float(defect)
        ok = bool(defect <= tol) if passed is None else bool(passed)
        self.entries.append({"identity": name, "params": params, "defect": defect, "tolerance": tol, "passed": ok})

    @property
    def passed(self):
        return all(e["passed"] for e in self.entries)

    def summary(self):
        out = {}
        for e in self.entries:
            s = out.setdefault(e["identity"], {"checks": 0, "failed": 0, "max_defect": 0.0})
            s["checks"] += 1
            s["failed"] += 0 if e["passed"] else 1
            s["max_defect"] = max(s["max_defect"], e["defect"])
        return out

    def to_dict(self):
        return {"passed": self.passed, "summary": self.summary(), "entries": self.entries}


def _samples(n=50):
    return (np.arange(n) + 0.5) / n


def check_gamma(report):
    xs = np.concatenate([np.linspace(0.05, 0.95, 19), np.linspace(1.05, 9.95, 90), [0.5, 1.5, 2.5, 3.0, 7.0]])
    rel = max(abs(gamma(x) / math.gamma(x) - 1.0) for x in xs)
    report.add("gamma_reference", {"points": int(xs.size)}, rel, TOL["gamma_reference"])


def check_power_rule(report, sigmas, max_power=6):
    x = _samples()
    for sigma in sigmas:
        for p in range(max_power + 1):
            ts = PowerTermSum.polynomial([0.0] * p + [1.0])
            got = ts.left_integral(sigma)(x)
            ref = math.gamma(p + 1.0) / math.gamma(p + 1.0 + sigma) * x ** (p + sigma)
            report.add("power_rule", {"sigma": sigma, "p": p}, np.max(np.abs(got - ref)), TOL["power_rule"])
            pts = (0.3, 1.0)
            orc = [oracle_frac_integral(lambda s, p=p: s**p, sigma, xi) for xi in pts]
            dev = max(abs(ts.left_integral(sigma)(xi) - o) for xi, o in zip(pts, orc))
            report.add("power_rule_oracle", {"sigma": sigma, "p": p}, dev, TOL["power_rule_oracle"])


def check_semigroup(report, pairs, battery):
    x = _samples()
    for mu, sigma in pairs:
        for name, w in battery.items():
            left = np.max(np.abs(w.left_integral(sigma).left_integral(mu)(x) - w.left_integral(mu + sigma)(x)))
            right = np.max(np.abs(w.right_integral(sigma).right_integral(mu)(x) - w.right_integral(mu + sigma)(x)))
            report.add("semigroup", {"mu": mu, "sigma": sigma, "w": name}, max(left, right), TOL["semigroup"])


def check_adjoint(report, mus, battery):
    v_list = {"x": PowerTermSum.polynomial([0.0, 1.0]), "1-x^2": PowerTermSum.polynomial([1.0, 0.0, -1.0])}
    for mu in mus:
        for name, w in battery.items():
            for vname, v in v_list.items():
                lhs = integrate_product(w.left_integral(mu), v)
                rhs = integrate_product(w, v.right_integral(mu))
                report.add("adjoint", {"mu": mu, "w": name, "v": vname}, abs(lhs - rhs), TOL["adjoint"])


def check_commutation(report, sigmas, battery):
    x = _samples()
    for sigma in sigmas:
        for name, w in battery.items():
            dl = np.max(np.abs(w.left_integral(sigma).derivative()(x) - w.derivative().left_integral(sigma)(x)))
            dr = np.max(np.abs(w.right_integral(sigma).derivative()(x) - w.derivative().right_integral(sigma)(x)))
            report.add("commutation", {"sigma": sigma, "w": name}, max(dl, dr), TOL["commutation"])


def check_cos_identity(report, mus, battery):
    for mu in mus:
        c = math.cos(math.pi * mu)
        for name, w in battery.items():
            cross = integrate_product(caputo_left(w, mu), caputo_right(w, mu))
            nl = j_seminorm(w, mu, "left") ** 2
            nr = j_seminorm(w, mu, "right") ** 2
            rel = max(abs(cross - c * nl) / nl, abs(cross - c * nr) / nr)
            report.add("cos_identity", {"mu": mu, "w": name}, rel, TOL["cos_identity"])
            report.add("seminorm_equality", {"mu": mu, "w": name}, abs(nl - nr) / nl, TOL["seminorm_equality"])


def check_mirror(report, sigmas, battery):
    x = _samples()
    for sigma in sigmas:
        for name, w in battery.items():
            a = w.reflect().left_integral(sigma)(x)
            b = w.right_integral(sigma)(1.0 - x)
            report.add("mirror", {"sigma": sigma, "w": name}, np.max(np.abs(a - b)), TOL["mirror"])


def check_sandwich(report, betas, battery, thetas=(0.0, 0.3, 0.5, 1.0)):
    """(1 - cos pi b)/2 |w|^2 <= ||I D w||^2 <= (1 + cos pi b) |w|^2 for b < 1/2.

    |w| is the two-sided seminorm of order 1 - b of the zero extension,
    measured over the whole line; restricted to (0, 1) the upper bound can
    fail (for theta = 1/2 and small b).
    """
    for beta in betas:
        if not 0.0 < beta < 0.5:
            continue
        c = math.cos(math.pi * beta)
        for name, w in battery.items():
            jl = j_seminorm(w, 1.0 - beta, "left") ** 2
            jr = j_seminorm(w, 1.0 - beta, "right") ** 2
            dw = w.derivative()
            for theta in thetas:
                mid_ts = PowerTermSum.zero()
                if theta:
                    mid_ts = mid_ts + theta * dw.left_integral(beta)
                if theta != 1.0:
                    mid_ts = mid_ts + (1.0 - theta) * dw.right_integral(beta)
                mid = integrate_product(mid_ts, mid_ts)
                jn = theta**2 * jl + (1.0 - theta) ** 2 * jr
                lo, hi = 0.5 * (1.0 - c) * jn, (1.0 + c) * jn
                ok = lo * (1 - 1e-12) <= mid <= hi * (1 + 1e-12)
                margin = min(mid - lo, hi - mid) / jn
                report.add("sandwich", {"beta": beta, "theta": theta, "w": name}, max(-margin, 0.0), 0.0, ok)


def check_norm_sanity(report, mus, battery, thetas=(0.0, 0.5, 1.0)):
    """Poincare ratio finite and positive; two-sided seminorm between the one-sided ones."""
    for mu in mus:
        for name, w in battery.items():
            l2 = l2_norm(w)
            jl = j_seminorm(w, mu, "left")
            jr = j_seminorm(w, mu, "right")
            ratio = l2 / jl if jl > 0 else float("inf")
            report.add("poincare_sanity", {"mu": mu, "w": name, "ratio": ratio}, 0.0, 0.0,
                       math.isfinite(ratio) and ratio > 0.0)
            for theta in thetas:
                j2 = j_seminorm(w, mu, "two_sided", theta=theta)
                lo = 0.5 * min(jl, jr) * math.sqrt(theta**2 + (1 - theta) ** 2)
                hi = max(jl, jr)
                report.add("equivalence_sanity", {"mu": mu, "theta": theta, "w": name}, 0.0, 0.0,
                           lo * (1 - 1e-12) <= j2 <= hi * (1 + 1e-12))


def identity_suite(beta_list=DEFAULT_BETAS, mu_list=DEFAULT_MUS, w_battery=None):
    """Run every identity over the given orders and functions."""
    battery = default_battery() if w_battery is None else {k: as_termsum(v) for k, v in dict(w_battery).items()}
    if not battery:
        raise ValueError("the function battery must not be empty")
    betas = tuple(float(b) for b in beta_list)
    mus = tuple(float(m) for m in mu_list)
    report = IdentityReport()
    check_gamma(report)
    check_power_rule(report, betas)
    pairs = [(a, b) for a in betas[::2] for b in betas[1::2]] or [(betas[0], betas[0])]
    check_semigroup(report, pairs, battery)
    check_adjoint(report, betas, battery)
    check_commutation(report, betas, battery)
    check_mirror(report, betas, battery)
    check_cos_identity(report, mus, battery)
    check_sandwich(report, betas, battery)
    check_norm_sanity(report, mus, battery)
    return report
