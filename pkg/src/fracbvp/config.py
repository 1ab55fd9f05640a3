"""Problem configuration: JSON file <-> ProblemSpec.

Schema (every key except beta is optional; defaults shown):

    {
      "beta": 0.3,
      "theta": 0.5,
      "K": {"kind": "constant", "value": 1.0},
      "f": {"kind": "constant", "value": 1.0},
      "mesh": {"n": 64, "grading": "uniform"},
      "method": "galerkin",
      "tolerances": {"xi": 1e-6, "characterization_residual": 1e-2},
      "n_list": [16, 32, 64, 128, 256, 512],
      "verify": {"betas": [...], "mus": [...]},
      "fault": {"gamma_scale": 0.0}
    }

K kinds: constant {value}, piecewise_constant {breaks, values},
polynomial {coeffs}, tabulated {nodes, values}, counterexample {} (the
coefficient built by the coercivity counterexample for this beta, theta).
f kinds: constant {value}, polynomial {coeffs}, term_sum {terms: list of
[coeff, anchor, "left"|"right", exponent]}, manufactured {u_exact} with
u_exact given as {coeffs} or {terms}.
grading: "uniform" or {"kind": "graded", "r": 2.0, "end": "left"}.
"""

import copy
import hashlib
import json
from dataclasses import dataclass, field

from .classical import DiffusivityField
from .errors import ConfigError, FracBVPError
from .fracops.terms import PowerTermSum
from .harness.identities import DEFAULT_BETAS, DEFAULT_MUS
from .petrov import CHAR_RESIDUAL_TOL, XI_TOL
from .spaces import build_partition

METHODS = ("galerkin", "petrov", "characterization")
K_KINDS = ("constant", "piecewise_constant", "polynomial", "tabulated", "counterexample")
F_KINDS = ("constant", "polynomial", "term_sum", "manufactured")
DEFAULT_N_LIST = (16, 32, 64, 128, 256, 512)
_TOP_KEYS = {"beta", "theta", "K", "f", "mesh", "method", "tolerances", "n_list", "verify", "fault"}


def _num(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _int(value, path):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    return int(value)


def _num_list(value, path):
    if not isinstance(value, list):
        raise ConfigError(f"{path}: expected a list, got {value!r}")
    return [_num(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _obj(value, path):
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object, got {value!r}")
    return value


def _get(d, key, path):
    if key not in d:
        raise ConfigError(f"{path}.{key}: missing")
    return d[key]


def _terms(value, path):
    if not isinstance(value, list):
        raise ConfigError(f"{path}: expected a list of [coeff, anchor, side, exponent]")
    out = []
    for i, t in enumerate(value):
        p = f"{path}[{i}]"
        if not isinstance(t, list) or len(t) != 4:
            raise ConfigError(f"{p}: expected [coeff, anchor, side, exponent]")
        if t[2] not in ("left", "right"):
            raise ConfigError(f"{p}[2]: side must be 'left' or 'right'")
        out.append([_num(t[0], f"{p}[0]"), _num(t[1], f"{p}[1]"), t[2], _num(t[3], f"{p}[3]")])
    return out


def _norm_K(d, path="K"):
    d = _obj(d, path)
    kind = _get(d, "kind", path)
    if kind not in K_KINDS:
        raise ConfigError(f"{path}.kind: must be one of {K_KINDS}, got {kind!r}")
    if kind == "constant":
        return {"kind": kind, "value": _num(_get(d, "value", path), f"{path}.value")}
    if kind == "piecewise_constant":
        return {
            "kind": kind,
            "breaks": _num_list(d.get("breaks", []), f"{path}.breaks"),
            "values": _num_list(_get(d, "values", path), f"{path}.values"),
        }
    if kind == "polynomial":
        return {"kind": kind, "coeffs": _num_list(_get(d, "coeffs", path), f"{path}.coeffs")}
    if kind == "tabulated":
        return {
            "kind": kind,
            "nodes": _num_list(_get(d, "nodes", path), f"{path}.nodes"),
            "values": _num_list(_get(d, "values", path), f"{path}.values"),
        }
    return {"kind": kind}


def _norm_u(d, path):
    d = _obj(d, path)
    if "coeffs" in d:
        return {"coeffs": _num_list(d["coeffs"], f"{path}.coeffs")}
    if "terms" in d:
        return {"terms": _terms(d["terms"], f"{path}.terms")}
    raise ConfigError(f"{path}: give either coeffs or terms")


def _norm_f(d, path="f"):
    d = _obj(d, path)
    kind = _get(d, "kind", path)
    if kind not in F_KINDS:
        raise ConfigError(f"{path}.kind: must be one of {F_KINDS}, got {kind!r}")
    if kind == "constant":
        return {"kind": kind, "value": _num(_get(d, "value", path), f"{path}.value")}
    if kind == "polynomial":
        return {"kind": kind, "coeffs": _num_list(_get(d, "coeffs", path), f"{path}.coeffs")}
    if kind == "term_sum":
        return {"kind": kind, "terms": _terms(_get(d, "terms", path), f"{path}.terms")}
    return {"kind": kind, "u_exact": _norm_u(_get(d, "u_exact", path), f"{path}.u_exact")}


def _norm_grading(g, path="mesh.grading"):
    if g == "uniform":
        return "uniform"
    g = _obj(g, path)
    kind = g.get("kind", "graded")
    if kind == "uniform":
        return "uniform"
    if kind != "graded":
        raise ConfigError(f"{path}.kind: must be 'uniform' or 'graded'")
    end = g.get("end", "left")
    if end not in ("left", "right", "both"):
        raise ConfigError(f"{path}.end: must be 'left', 'right' or 'both'")
    r = _num(g.get("r", 1.0), f"{path}.r")
    if r < 1.0:
        raise ConfigError(f"{path}.r: must be >= 1")
    return {"kind": "graded", "r": r, "end": end}


def _termsum(spec):
    if "coeffs" in spec:
        return PowerTermSum.polynomial(spec["coeffs"])
    return PowerTermSum.from_terms([tuple(t) for t in spec["terms"]])


@dataclass(frozen=True)
class ProblemSpec:
    """A full problem instance in canonical (JSON-ready) form."""

    beta: float
    theta: float = 0.5
    K: dict = field(default_factory=lambda: {"kind": "constant", "value": 1.0})
    f: dict = field(default_factory=lambda: {"kind": "constant", "value": 1.0})
    n: int = 64
    grading: object = "uniform"
    method: str = "galerkin"
    xi_tol: float = XI_TOL
    char_residual_tol: float = CHAR_RESIDUAL_TOL
    n_list: tuple = DEFAULT_N_LIST
    verify_betas: tuple = DEFAULT_BETAS
    verify_mus: tuple = DEFAULT_MUS
    gamma_fault: float = 0.0

    @classmethod
    def from_dict(cls, d):
        d = _obj(d, "config")
        unknown = sorted(set(d) - _TOP_KEYS)
        if unknown:
            raise ConfigError(f"config: unknown keys {unknown}")
        beta = _num(_get(d, "beta", "config"), "beta")
        theta = _num(d.get("theta", 0.5), "theta")
        if not 0.0 < beta < 1.0:
            raise ConfigError(f"beta: must lie in (0, 1), got {beta}")
        if not 0.0 <= theta <= 1.0:
            raise ConfigError(f"theta: must lie in [0, 1], got {theta}")
        method = d.get("method", "galerkin")
        if method not in METHODS:
            raise ConfigError(f"method: must be one of {METHODS}, got {method!r}")
        if method != "galerkin" and beta >= 0.5:
            raise ConfigError(f"method: {method} needs beta < 1/2, got beta = {beta}")
        mesh = _obj(d.get("mesh", {}), "mesh")
        n = _int(mesh.get("n", 64), "mesh.n")
        if n < 2:
            raise ConfigError("mesh.n: need at least 2 cells")
        tol = _obj(d.get("tolerances", {}), "tolerances")
        verify = _obj(d.get("verify", {}), "verify")
        fault = _obj(d.get("fault", {}), "fault")
        n_list = d.get("n_list", list(DEFAULT_N_LIST))
        if not isinstance(n_list, list):
            raise ConfigError("n_list: expected a list of integers")
        spec = cls(
            beta=beta,
            theta=theta,
            K=_norm_K(d.get("K", {"kind": "constant", "value": 1.0})),
            f=_norm_f(d.get("f", {"kind": "constant", "value": 1.0})),
            n=n,
            grading=_norm_grading(mesh.get("grading", "uniform")),
            method=method,
            xi_tol=_num(tol.get("xi", XI_TOL), "tolerances.xi"),
            char_residual_tol=_num(tol.get("characterization_residual", CHAR_RESIDUAL_TOL),
                                   "tolerances.characterization_residual"),
            n_list=tuple(_int(v, f"n_list[{i}]") for i, v in enumerate(n_list)),
            verify_betas=tuple(_num_list(verify.get("betas", list(DEFAULT_BETAS)), "verify.betas")),
            verify_mus=tuple(_num_list(verify.get("mus", list(DEFAULT_MUS)), "verify.mus")),
            gamma_fault=_num(fault.get("gamma_scale", 0.0), "fault.gamma_scale"),
        )
        spec._validate_objects()
        return spec

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_json(text)

    def to_dict(self):
        return {
            "beta": self.beta,
            "theta": self.theta,
            "K": copy.deepcopy(self.K),
            "f": copy.deepcopy(self.f),
            "mesh": {"n": self.n, "grading": copy.deepcopy(self.grading)},
            "method": self.method,
            "tolerances": {"xi": self.xi_tol, "characterization_residual": self.char_residual_tol},
            "n_list": list(self.n_list),
            "verify": {"betas": list(self.verify_betas), "mus": list(self.verify_mus)},
            "fault": {"gamma_scale": self.gamma_fault},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def input_hash(self):
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    def _validate_objects(self):
        """Build K, f and the mesh once so errors surface at parse time."""
        try:
            if self.K["kind"] != "counterexample":
                self.build_K()
            self.build_f()
            self.build_partition()
        except ConfigError:
            raise
        except (FracBVPError, ValueError) as exc:
            raise ConfigError(f"config: {exc}") from exc

    # -- builders --------------------------------------------------------------

    def build_K(self):
        if self.K["kind"] == "counterexample":
            from .galerkin import find_coercivity_violation

            return find_coercivity_violation(self.beta, self.theta).K
        return DiffusivityField.from_dict(self.K)

    def build_f(self):
        kind = self.f["kind"]
        if kind == "constant":
            return PowerTermSum.constant(self.f["value"])
        if kind == "polynomial":
            return PowerTermSum.polynomial(self.f["coeffs"])
        if kind == "term_sum":
            return PowerTermSum.from_terms([tuple(t) for t in self.f["terms"]])
        return self.manufactured_case().f

    def u_exact(self):
        if self.f["kind"] != "manufactured":
            return None
        return _termsum(self.f["u_exact"])

    def manufactured_case(self):
        from .harness.manufacture import manufacture

        if self.f["kind"] != "manufactured":
            raise ConfigError("f: a manufactured solution is required here")
        try:
            return manufacture(self.u_exact(), self.build_K(), self.beta, self.theta)
        except FracBVPError as exc:
            raise ConfigError(f"f.u_exact: {exc}") from exc

    def build_partition(self):
        return build_partition(self.n, self.grading)
