import json

import pytest

from fracbvp.cli import main
from fracbvp.config import ProblemSpec
from fracbvp.errors import ConfigError

MANUFACTURED = {"kind": "manufactured", "u_exact": {"coeffs": [0.0, 1.0, -1.0]}}


def write(tmp_path, data, name="config.json"):
    p = tmp_path / name
    p.write_text(data if isinstance(data, str) else json.dumps(data))
    return str(p)


def load(path):
    return json.loads(path.read_text())


def test_spec_roundtrip():
    spec = ProblemSpec.from_dict({
        "beta": 0.3,
        "theta": 0.2,
        "K": {"kind": "piecewise_constant", "breaks": [0.4], "values": [1, 2]},
        "f": {"kind": "term_sum", "terms": [[1.0, 0.0, "left", 0.5]]},
        "mesh": {"n": 32, "grading": {"kind": "graded", "r": 2, "end": "both"}},
        "method": "petrov",
    })
    again = ProblemSpec.from_json(spec.to_json())
    assert again == spec
    assert again.input_hash() == spec.input_hash()


@pytest.mark.parametrize("data, where", [
    ({"theta": 0.5}, "beta"),
    ({"beta": 1.2}, "beta"),
    ({"beta": 0.3, "theta": -0.1}, "theta"),
    ({"beta": 0.7, "method": "petrov"}, "method"),
    ({"beta": 0.3, "K": {"kind": "polynomial"}}, "K.coeffs"),
    ({"beta": 0.3, "K": {"kind": "constant", "value": "one"}}, "K.value"),
    ({"beta": 0.3, "K": {"kind": "polynomial", "coeffs": [1.0, -2.0]}}, "K must be bounded"),
    ({"beta": 0.3, "f": {"kind": "term_sum", "terms": [[1, 0, "up", 0]]}}, "f.terms[0][2]"),
    ({"beta": 0.3, "mesh": {"n": 1}}, "mesh.n"),
    ({"beta": 0.3, "colour": 1}, "unknown keys"),
    ({"beta": 0.3, "K": {"kind": "constant", "value": 1}, "f": {"kind": "manufactured",
      "u_exact": {"coeffs": [1.0]}}}, "f.u_exact"),
])
def test_spec_errors_name_the_field(data, where):
    with pytest.raises(ConfigError, match=where.replace("[", r"\[").replace("]", r"\]")):
        ProblemSpec.from_dict(data)


def test_malformed_json_reports_line():
    with pytest.raises(ConfigError, match="line 2"):
        ProblemSpec.from_json('{"beta": 0.3,\n}')


def test_verify_exit_codes(tmp_path):
    cfg = write(tmp_path, {"beta": 0.5, "verify": {"betas": [0.2, 0.3], "mus": [0.75]}})
    assert main(["verify", "--config", cfg, "--out", str(tmp_path / "ok")]) == 0
    assert load(tmp_path / "ok" / "report.json")["identities"]["passed"] is True
    assert main(["verify", "--config", cfg, "--out", str(tmp_path / "bad"), "--inject-gamma-fault", "1e-6"]) == 1
    faulty = write(tmp_path, {"beta": 0.5, "verify": {"betas": [0.3], "mus": [0.75]}, "fault": {"gamma_scale": 1e-6}},
                   "faulty.json")
    assert main(["verify", "--config", faulty, "--out", str(tmp_path / "bad2")]) == 1
    assert main(["verify", "--config", write(tmp_path, "{oops", "x.json"), "--out", str(tmp_path / "x")]) == 2


def test_solve_petrov_constant_K(tmp_path):
    cfg = write(tmp_path, {"beta": 0.3, "method": "petrov", "mesh": {"n": 16}})
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    rep = load(tmp_path / "o" / "report.json")
    assert rep["wellposedness"]["xi"] == 1.0
    lines = (tmp_path / "o" / "solution.csv").read_text().splitlines()
    assert lines[0] == "x,u,Iu" and len(lines) == 18


def test_solve_galerkin_counterexample_K_flags(tmp_path):
    cfg = write(tmp_path, {"beta": 0.5, "theta": 0.25, "K": {"kind": "counterexample"}, "mesh": {"n": 32}})
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    assert load(tmp_path / "o" / "report.json")["coercivity_certificate_exists"] is True


def test_solve_parameter_contract(tmp_path):
    cfg = write(tmp_path, {"beta": 0.7, "method": "petrov"})
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert main(["solve", "--out", str(tmp_path / "o")]) == 2
    assert main(["bogus", "--out", str(tmp_path / "o")]) == 2


def test_solve_characterization_with_manufactured_error(tmp_path):
    cfg = write(tmp_path, {"beta": 0.3, "method": "characterization", "mesh": {"n": 64},
                           "K": {"kind": "polynomial", "coeffs": [1.0, 0.5]}, "f": MANUFACTURED})
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    rep = load(tmp_path / "o" / "report.json")
    assert rep["norms"]["error_l2"] < 1e-4
    assert rep["characterization"]["residual"] <= rep["characterization"]["tolerance"]


def test_counterexample_command(tmp_path):
    assert main(["counterexample", "--beta", "0.5", "--theta", "0.25", "--out", str(tmp_path / "o")]) == 0
    cert = load(tmp_path / "o" / "certificate.json")
    assert cert["value"] < 0.0 and cert["K"]["kind"] == "piecewise_constant"


def test_wellposed_command(tmp_path):
    cfg = write(tmp_path, {"beta": 0.3, "theta": 0.5})
    assert main(["wellposed", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    assert load(tmp_path / "o" / "wellposedness.json")["xi"] == 1.0
    # a tolerance above |Xi| with Xi not numerically zero: inconclusive
    cfg = write(tmp_path, {"beta": 0.3, "theta": 0.5, "tolerances": {"xi": 10.0}}, "c2.json")
    assert main(["wellposed", "--config", cfg, "--out", str(tmp_path / "o2")]) == 3


def test_converge_command(tmp_path):
    cfg = write(tmp_path, {"beta": 0.5, "f": MANUFACTURED, "n_list": [16, 32, 64, 128]})
    assert main(["converge", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    orders = load(tmp_path / "o" / "orders.json")["orders"]
    assert 1.0 <= orders[-1] <= 1.5
    header = (tmp_path / "o" / "convergence.csv").read_text().splitlines()[0]
    assert header == "n,h,err_l2,err_energy,order"
    bad = write(tmp_path, {"beta": 0.5, "f": MANUFACTURED, "n_list": [16, 32]}, "bad.json")
    assert main(["converge", "--config", bad, "--out", str(tmp_path / "b")]) == 2
    assert main(["converge", "--config", write(tmp_path, {"beta": 0.5}, "nof.json"), "--out", str(tmp_path / "c")]) == 2


def test_threads_from_environment(tmp_path, monkeypatch):
    cfg = write(tmp_path, {"beta": 0.3})
    monkeypatch.setenv("FRACBVP_THREADS", "zero")
    assert main(["wellposed", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    monkeypatch.setenv("FRACBVP_THREADS", "2")
    assert main(["wellposed", "--config", cfg, "--out", str(tmp_path / "o")]) == 0


def test_outputs_byte_identical(tmp_path):
    cfg = write(tmp_path, {"beta": 0.3, "theta": 0.4, "K": {"kind": "polynomial", "coeffs": [1.0, 0.5]},
                           "f": MANUFACTURED, "method": "petrov", "mesh": {"n": 32}, "n_list": [8, 16, 32, 64]})
    for cmd, files in (("solve", ["report.json", "solution.csv"]), ("converge", ["report.json", "convergence.csv"])):
        main([cmd, "--config", cfg, "--out", str(tmp_path / "a")])
        main([cmd, "--config", cfg, "--out", str(tmp_path / "b"), "--threads", "3"])
        for f in files:
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    rep = load(tmp_path / "a" / "report.json")
    assert ProblemSpec.from_dict(rep["config"]) == ProblemSpec.load(cfg)
