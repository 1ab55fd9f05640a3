"""Command-line front end.

    fracbvp {verify|solve|counterexample|wellposed|converge}
            [--config PATH] --out DIR [--force] [--seed INT] [--threads INT]

Exit codes: 0 success, 1 failed check or solver failure, 2 configuration or
parameter error, 3 inconclusive wellposedness verdict. Every command writes
a deterministic report.json (no timings) and a timing.json sidecar.
"""

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import time

import numpy as np

from . import __version__, _kernels
from .config import ProblemSpec
from .errors import ConfigError, FracBVPError, ParameterError, SearchFailureError, SolverError
from .fracops.special import set_gamma_fault

log = logging.getLogger("fracbvp")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_INCONCLUSIVE = 0, 1, 2, 3
COMMANDS = ("verify", "solve", "counterexample", "wellposed", "converge")


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def _write_json(path, data):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_clean(data), fh, sort_keys=True, indent=2, allow_nan=False)
        fh.write("\n")


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


class _Run:
    """Report under construction plus the timing sidecar."""

    def __init__(self, command, spec, args):
        self.command = command
        self.out = args.out
        self.report = {
            "command": command,
            "version": __version__,
            "seed": args.seed,
            "config": spec.to_dict() if spec is not None else None,
            "input_hash": spec.input_hash() if spec is not None else None,
        }
        self.timing = {}
        self._t0 = time.perf_counter()

    def timed(self, name, fn, *a, **kw):
        t = time.perf_counter()
        try:
            return fn(*a, **kw)
        finally:
            self.timing[name] = time.perf_counter() - t

    def finish(self, code):
        self.report["exit_code"] = code
        self.timing["total"] = time.perf_counter() - self._t0
        os.makedirs(self.out, exist_ok=True)
        _write_json(os.path.join(self.out, "report.json"), self.report)
        _write_json(os.path.join(self.out, "timing.json"), self.timing)
        return code


# -- commands ----------------------------------------------------------------


def cmd_verify(spec, args):
    from .harness.identities import identity_suite

    run = _Run("verify", spec, args)
    scale = args.inject_gamma_fault if args.inject_gamma_fault is not None else spec.gamma_fault
    set_gamma_fault(scale)
    try:
        rep = run.timed("identity_suite", identity_suite, spec.verify_betas, spec.verify_mus)
    finally:
        set_gamma_fault(0.0)
    run.report["gamma_fault"] = scale
    run.report["identities"] = rep.to_dict()
    if not rep.passed:
        bad = sorted(k for k, v in rep.summary().items() if v["failed"])
        log.error("identity checks failed: %s", ", ".join(bad))
    return run.finish(EXIT_OK if rep.passed else EXIT_FAIL)


def _solution_csv(x, u, iu):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(("x", "u", "Iu"))
    for row in zip(x, u, iu):
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def cmd_solve(spec, args):
    from .galerkin import assemble_galerkin, galerkin_solve
    from .petrov import (
        assemble_pg,
        hat_integral_matrix,
        pg_solve,
        solve_via_characterization,
        wellposedness_indicator,
    )
    from .spaces import FemSpace, j_seminorm, l2_norm

    run = _Run("solve", spec, args)
    K = run.timed("build_K", spec.build_K)
    f = run.timed("build_f", spec.build_f)
    space = FemSpace(spec.build_partition())
    beta, theta = spec.beta, spec.theta
    rep = run.report
    try:
        if spec.method == "galerkin":
            system = run.timed("assemble", assemble_galerkin, space, K, beta, theta, f)
            lam = run.timed("symmetric_eig", system.symmetric_min_eig)
            rep["symmetric_min_eigenvalue"] = lam
            rep["coercivity_certificate_exists"] = bool(lam < 0.0)
            if lam < 0.0:
                log.warning("the symmetric part of the Galerkin matrix is indefinite (min eigenvalue %.3e)", lam)
            u = run.timed("solve", galerkin_solve, system)
        else:
            wp = run.timed("wellposedness", wellposedness_indicator, K, beta, theta, tol=spec.xi_tol)
            rep["wellposedness"] = wp.to_dict()
            if wp.verdict == "violated" and not args.force:
                log.error("wellposedness indicator %.3e: refusing to solve (use --force)", wp.xi)
                rep["refused"] = True
                return run.finish(EXIT_FAIL)
            if spec.method == "petrov":
                u = run.timed("solve", pg_solve, assemble_pg(space, space, K, beta, theta, f))
            else:
                res = run.timed(
                    "solve", solve_via_characterization, K, beta, theta, f, space, spec.char_residual_tol
                )
                rep["characterization"] = {
                    "c_l": res.c_l,
                    "c_r": res.c_r,
                    "residual": res.residual,
                    "tolerance": spec.char_residual_tol,
                }
                u = res.u
    except SolverError as exc:
        log.error("%s (condition estimate %.3e)", exc, exc.condition_estimate)
        rep["solver_error"] = {"message": str(exc), "condition_estimate": exc.condition_estimate}
        return run.finish(EXIT_FAIL)
    rep["condition_estimate"] = u.info.get("condition_estimate")
    x = space.nodes
    iu = hat_integral_matrix(space, x, beta, theta) @ u.coefficients
    _write_text(os.path.join(args.out, "solution.csv"), _solution_csv(x, u.nodal_values(), iu))
    mu = 1.0 - 0.5 * beta if spec.method == "galerkin" else 1.0 - beta
    norms = {"l2": l2_norm(u), "energy_mu": mu, "energy": j_seminorm(u, mu)}
    exact = spec.u_exact()
    if exact is not None:
        diff = u.to_termsum() - exact
        norms["error_l2"] = l2_norm(diff)
        norms["error_energy"] = j_seminorm(diff, mu)
    rep["norms"] = norms
    return run.finish(EXIT_OK)


def cmd_counterexample(spec, args):
    from .galerkin import find_coercivity_violation
    from .harness.oracle import oracle_bilinear

    run = _Run("counterexample", spec, args)
    try:
        cert = run.timed("search", find_coercivity_violation, spec.beta, spec.theta)
    except SearchFailureError as exc:
        log.error("%s", exc)
        run.report["search_error"] = str(exc)
        return run.finish(EXIT_FAIL)
    data = cert.to_dict()
    if args.oracle:
        data["oracle_value"] = run.timed("oracle", oracle_bilinear, cert.w, cert.w, cert.K, spec.beta, spec.theta)
    _write_json(os.path.join(args.out, "certificate.json"), data)
    run.report["certificate"] = data
    run.report["negative"] = bool(cert.value < 0.0)
    return run.finish(EXIT_OK if cert.value < 0.0 else EXIT_FAIL)


def cmd_wellposed(spec, args):
    from .petrov import wellposedness_indicator

    run = _Run("wellposed", spec, args)
    K = run.timed("build_K", spec.build_K)
    try:
        wp = run.timed("indicator", wellposedness_indicator, K, spec.beta, spec.theta, tol=spec.xi_tol)
    except SolverError as exc:
        log.error("%s", exc)
        run.report["solver_error"] = str(exc)
        return run.finish(EXIT_FAIL)
    _write_json(os.path.join(args.out, "wellposedness.json"), wp.to_dict())
    run.report["wellposedness"] = wp.to_dict()
    code = {"wellposed": EXIT_OK, "violated": EXIT_FAIL}.get(wp.verdict, EXIT_INCONCLUSIVE)
    return run.finish(code)


def cmd_converge(spec, args):
    from .harness.convergence import convergence_study

    run = _Run("converge", spec, args)
    case = spec.manufactured_case()
    try:
        table = run.timed("study", convergence_study, case, spec.method, spec.n_list, threads=args.threads)
    except ParameterError as exc:
        raise ConfigError(f"n_list: {exc}") from exc
    _write_text(os.path.join(args.out, "convergence.csv"), table.to_csv())
    orders = {"method": table.method, "mu": table.mu, "n": [r["n"] for r in table.rows], "orders": table.orders}
    _write_json(os.path.join(args.out, "orders.json"), orders)
    run.report["table"] = table.to_dict()
    failed = [r["n"] for r in table.rows if r["error"] is not None]
    if failed:
        log.error("solver failed for n = %s", failed)
    return run.finish(EXIT_FAIL if failed else EXIT_OK)


# -- entry point -------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="fracbvp", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON problem file (optional for verify and counterexample)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--force", action="store_true", help="solve even when the wellposedness verdict is violated")
    p.add_argument("--seed", type=int, default=0, help="recorded in the report; no command draws random numbers")
    p.add_argument("--threads", type=int, default=None, help="worker threads (env FRACBVP_THREADS)")
    p.add_argument("--beta", type=float, help="override beta")
    p.add_argument("--theta", type=float, help="override theta")
    p.add_argument("--inject-gamma-fault", type=float, default=None, metavar="SCALE",
                   help="negative control: perturb gamma(x) by a factor (1 + SCALE x)")
    p.add_argument("--oracle", action="store_true", help="counterexample: re-check B(w, w) by oracle quadrature")
    return p


def _resolve_threads(value):
    if value is None:
        env = os.environ.get("FRACBVP_THREADS", "1")
        try:
            value = int(env)
        except ValueError:
            raise ConfigError(f"FRACBVP_THREADS must be an integer, got {env!r}") from None
    if value < 1:
        raise ConfigError(f"threads must be positive, got {value}")
    return value


def _load_spec(args):
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            data = fh.read()
        try:
            raw = json.loads(data)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    elif args.command in ("verify", "counterexample"):
        raw = {"beta": 0.5}
    else:
        raise ConfigError(f"{args.command} needs --config")
    if isinstance(raw, dict):
        if args.beta is not None:
            raw["beta"] = args.beta
        if args.theta is not None:
            raw["theta"] = args.theta
    return ProblemSpec.from_dict(raw)


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="fracbvp: %(levelname)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    handlers = {
        "verify": cmd_verify,
        "solve": cmd_solve,
        "counterexample": cmd_counterexample,
        "wellposed": cmd_wellposed,
        "converge": cmd_converge,
    }
    try:
        args.threads = _resolve_threads(args.threads)
        _kernels.set_threads(args.threads)
        spec = _load_spec(args)
        os.makedirs(args.out, exist_ok=True)
        return handlers[args.command](spec, args)
    except (ConfigError, ParameterError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except FracBVPError as exc:
        log.error("%s", exc)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
