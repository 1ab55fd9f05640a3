"""Observed convergence orders against a manufactured solution."""

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import FracBVPError, ParameterError
from ..galerkin import assemble_galerkin, galerkin_solve
from ..petrov import assemble_pg, pg_solve, solve_via_characterization
from ..spaces import FemSpace, build_partition, energy_error, l2_norm

METHODS = ("galerkin", "petrov", "characterization")
CSV_COLUMNS = ("n", "h", "err_l2", "err_energy", "order")


@dataclass
class ConvergenceTable:
    method: str
    mu: float
    rows: list = field(default_factory=list)  # dicts keyed by CSV_COLUMNS plus "error"

    @property
    def orders(self):
        return [r["order"] for r in self.rows]

    def last_orders(self, k=2):
        vals = [o for o in self.orders if o is not None and math.isfinite(o)]
        return vals[-k:]

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.rows:
            writer.writerow([_fmt(r[c]) for c in CSV_COLUMNS])
        return buf.getvalue()

    def to_dict(self):
        return {"method": self.method, "mu": self.mu, "rows": [dict(r) for r in self.rows]}


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def energy_order(method, beta):
    """Order mu of the energy seminorm natural to each formulation."""
    return 1.0 - 0.5 * beta if method == "galerkin" else 1.0 - beta


def _check_n_list(n_list):
    n_list = [int(n) for n in n_list]
    if len(n_list) < 4:
        raise ParameterError("a convergence study needs at least 4 meshes")
    if any(b != 2 * a for a, b in zip(n_list, n_list[1:])):
        raise ParameterError("mesh sizes must be successive doublings")
    return n_list


def _solve(case, method, space):
    if method == "galerkin":
        return galerkin_solve(assemble_galerkin(space, case.K, case.beta, case.theta, case.f))
    if method == "petrov":
        return pg_solve(assemble_pg(space, space, case.K, case.beta, case.theta, case.f))
    return solve_via_characterization(case.K, case.beta, case.theta, case.f, space).u


def _row(case, method, mu, n):
    space = FemSpace(build_partition(n))
    row = {"n": n, "h": 1.0 / n, "err_l2": None, "err_energy": None, "order": None, "error": None}
    try:
        u_h = _solve(case, method, space)
        diff = u_h.to_termsum() - case.u_exact
        row["err_l2"] = l2_norm(diff)
        row["err_energy"] = energy_error(u_h, case.u_exact, mu)
    except FracBVPError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def convergence_study(case, method, n_list, threads=1):
    """Errors of the discrete solution on each mesh and the observed orders.

    The order attached to a row is log2 of the previous energy error over the
    current one. A failed solve leaves its row empty (with the error message)
    and the study moves on.
    """
    if method not in METHODS:
        raise ParameterError(f"method must be one of {METHODS}, got {method!r}")
    n_list = _check_n_list(n_list)
    mu = energy_order(method, case.beta)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda n: _row(case, method, mu, n), n_list))
    else:
        rows = [_row(case, method, mu, n) for n in n_list]
    for prev, cur in zip(rows, rows[1:]):
        a, b = prev["err_energy"], cur["err_energy"]
        if a is not None and b is not None and a > 0.0 and b > 0.0:
            cur["order"] = math.log2(a / b)
    return ConvergenceTable(method, mu, rows)
