import json
import subprocess
import sys

import pytest

from weighted_premium import Exponential, Gamma, LogNormal, Pareto, SpecParseError, Uniform, ValidationError
from weighted_premium.cli import dumps, main, parse_dist_spec


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# -- spec parsing -----------------------------------------------------------


def test_parse_specs():
    assert parse_dist_spec("exp:1.0") == Exponential(1.0)
    assert parse_dist_spec("pareto:2:1") == Pareto(2.0, 1.0)
    assert parse_dist_spec("lognormal:0:0.5") == LogNormal(0.0, 0.5)
    assert parse_dist_spec("gamma:2:1") == Gamma(2.0, 1.0)
    assert parse_dist_spec("uniform:0:2") == Uniform(0.0, 2.0)


def test_parse_errors():
    with pytest.raises(ValidationError):
        parse_dist_spec("exp:-1")
    with pytest.raises(SpecParseError) as info:
        parse_dist_spec("gamma:2:x")
    assert info.value.position == len("gamma:2:")
    with pytest.raises(SpecParseError):
        parse_dist_spec("weibull:1:2")
    with pytest.raises(SpecParseError):
        parse_dist_spec("exp:1:2")
    with pytest.raises(SpecParseError):
        parse_dist_spec("gamma:2")


def test_dumps_non_finite():
    assert json.loads(dumps({"a": float("inf"), "b": [float("nan"), 0.1]})) == {"a": "inf", "b": ["nan", 0.1]}


# -- subcommands ------------------------------------------------------------


def test_premium_command(capsys):
    code, out, _ = run(capsys, "premium", "--dist", "exp:1.0", "--weight", "esscher", "--lambda", "0.5")
    assert code == 0
    d = json.loads(out)
    assert list(d) == ["lambda", "premium", "net_premium", "loading", "path", "abs_error_estimate"]
    assert d["premium"] == pytest.approx(2.0, abs=1e-6)


def test_premium_deterministic(capsys):
    argv = ("premium", "--dist", "gamma:2:1", "--weight", "w6", "--lambda", "2")
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_premium_divergent_exit_2(capsys):
    code, out, err = run(capsys, "premium", "--dist", "exp:1.0", "--weight", "esscher", "--lambda", "2")
    assert code == 2 and out == "" and "DivergentPremium" in err


def test_zero_normalizer_exit_2(capsys):
    code, _, err = run(capsys, "premium", "--dist", "uniform:0:2", "--weight", "cte", "--lambda", "3")
    assert code == 2 and "ZeroNormalizer" in err


def test_usage_errors_exit_1(capsys):
    assert run(capsys, "premium", "--dist", "exp:-1", "--weight", "esscher", "--lambda", "0.5")[0] == 1
    assert run(capsys, "premium", "--dist", "exp:1", "--weight", "w9", "--lambda", "0.5")[0] == 1
    assert run(capsys, "premium", "--dist", "exp:1", "--weight", "esscher", "--lambda", "-1")[0] == 1
    assert run(capsys, "premium", "--dist", "exp:1", "--weight", "esscher")[0] == 1
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys, "--help")[0] == 0
    assert run(capsys, "premium", "--dist", "empirical:/no/such/file", "--weight", "cte", "--lambda", "1")[0] == 1


def test_curve_csv(capsys):
    code, out, _ = run(capsys, "curve", "--dist", "exp:1.0", "--weight", "kamps",
                       "--lambda-min", "0.5", "--lambda-max", "2", "--points", "3")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "lambda,premium,error"
    vals = [float(line.split(",")[1]) for line in lines[1:]]
    assert vals == pytest.approx([4 / 3, 1.5, 5 / 3], abs=1e-6)


def test_curve_json_and_failures(capsys):
    code, out, _ = run(capsys, "curve", "--dist", "exp:1.0", "--weight", "esscher",
                       "--lambda-min", "0.5", "--lambda-max", "2", "--points", "2", "--format", "json")
    rows = json.loads(out)
    assert code == 2
    assert rows[0]["premium"] == pytest.approx(2.0, abs=1e-6)
    assert "error" in rows[1]
    assert run(capsys, "curve", "--dist", "exp:1", "--weight", "kamps", "--lambda-min", "2", "--lambda-max", "1")[0] == 1


def test_calibrate(capsys):
    code, out, _ = run(capsys, "calibrate", "--dist", "exp:1.0", "--weight", "cte", "--target", "3.5")
    assert code == 0
    d = json.loads(out)
    assert d["status"] == "UniqueSolution"
    assert d["lambda_star"] == pytest.approx(2.5, abs=1e-8)


def test_calibrate_no_solution_exit_2(capsys):
    code, out, _ = run(capsys, "calibrate", "--dist", "exp:1.0", "--weight", "kamps", "--target", "3")
    assert code == 2 and json.loads(out)["status"] == "NoSolutionAboveRange"


def test_empirical_file(tmp_path, capsys):
    f = tmp_path / "losses.csv"
    f.write_text("1\n2\n3\n")
    code, out, _ = run(capsys, "calibrate", "--dist", f"empirical:{f}", "--weight", "cte", "--target", "2.5")
    d = json.loads(out)
    assert code == 0 and d["status"] == "PlateauSolution" and d["lambda_star"] == 1.0
    code, out, _ = run(capsys, "premium", "--dist", f"empirical:{f}", "--weight", "cte", "--lambda", "1.5")
    assert json.loads(out)["premium"] == 2.5


def test_bad_empirical_file(tmp_path, capsys):
    f = tmp_path / "bad.csv"
    f.write_text("1\nabc\n")
    code, _, err = run(capsys, "premium", "--dist", f"empirical:{f}", "--weight", "cte", "--lambda", "0.5")
    assert code == 1 and "2" in err


def test_verify_w6(capsys):
    code, out, _ = run(capsys, "verify", "--weight", "w6", "--grid", "64")
    reports = json.loads(out)
    assert code == 0
    assert all(r["pass"] for r in reports)
    assert {r["property"] for r in reports} == {"lattice", "mixed_partial", "ratio_monotone"}


def test_verify_all_with_audit_flags_cte(capsys):
    code, out, _ = run(capsys, "verify", "--weight", "all", "--grid", "16", "--dist", "exp:1")
    reports = json.loads(out)
    assert code == 3
    failing = [(r["family"], r["property"]) for r in reports if not r["pass"]]
    assert failing == [("cte", "assumption_audit")]


def test_verify_tolerance_override(capsys):
    assert run(capsys, "verify", "--weight", "esscher", "--grid", "16", "--tol", "1e-6")[0] == 0
    # demanding a lattice margin of 0.5 cannot hold: the scaled gaps are below 1
    assert run(capsys, "verify", "--weight", "esscher", "--grid", "16", "--tol", "-0.5")[0] == 3


def test_check_weights(tmp_path, capsys):
    out_file = tmp_path / "report.json"
    code, out, _ = run(capsys, "check-weights", "--grid", "16", "--out", str(out_file))
    assert code == 0 and out == ""
    reports = json.loads(out_file.read_text())
    assert all(r["pass"] for r in reports)
    assert "relative_error_bound" in {r["property"] for r in reports}


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "weighted_premium", "premium", "--dist", "exp:1.0", "--weight", "kamps", "--lambda", "1"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["premium"] == pytest.approx(1.5, abs=1e-6)
