import csv
import json
import subprocess
import sys

import pytest

from lagrangekit.cli import EXIT_DEGENERATE, EXIT_FAIL, EXIT_INPUT, EXIT_OK, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def load(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_inspect_pert(capsys, tmp_path):
    path = tmp_path / "r.json"
    code, out, _ = run(capsys, "inspect", "--lagrangian", "y1^2 + y2^2 + 2*x1*y1",
                       "--point", "1,2,3,4", "--json", str(path))
    assert code == EXIT_OK
    assert "S(L) = 18" in out.replace("18.0", "18")
    res = load(path)["results"]
    assert res["dhL"] == [6.0, 0.0] and res["SL"] == 18.0 and res["E"] == 25.0


def test_inspect_flat(capsys, tmp_path):
    path = tmp_path / "r.json"
    code, out, _ = run(capsys, "inspect", "--family", "flat", "--point", "0,0,3,4", "--json", str(path))
    assert code == EXIT_OK
    res = load(path)["results"]
    assert res["G"] == [0.0, 0.0] and res["N"] == [[0.0, 0.0], [0.0, 0.0]] and res["theta"] == [6.0, 8.0]
    for label in ("g =", "g_inv =", "Omega =", "h =", "E_L =", "d_hL =", "theta_L ="):
        assert label in out


def test_inspect_degenerate(capsys):
    code, _, err = run(capsys, "inspect", "--dim", "1", "--lagrangian", "y1", "--point", "0,1")
    assert code == EXIT_DEGENERATE and "DegenerateLagrangian" in err


@pytest.mark.parametrize("argv", [
    ["inspect", "--lagrangian", "y1^^2", "--point", "0,0,1,1"],
    ["inspect", "--lagrangian", "y3^2", "--point", "0,0,1,1"],
    ["inspect", "--lagrangian", "foo(y1)", "--point", "0,0,1,1"],
    ["inspect", "--lagrangian", "y1^2 + y2^2", "--point", "0,0,1"],
    ["inspect", "--lagrangian", "y1^2 + y2^2", "--point", "0,0,0,0"],
    ["inspect", "--lagrangian", "y1^2 + y2^2"],
    ["inspect", "--family", "nope"],
    ["inspect", "--family", "flat", "--lagrangian", "y1^2"],
    ["verify"],
    ["verify", "--family", "flat", "--samples", "0"],
    ["verify", "--family", "flat", "--box", "a:b,0:1"],
    ["counterexample", "--family", "flat"],
    ["counterexample", "--family", "custom", "--metric", "1,0;0,1"],
    ["inspect", "--lagrangian", "log(x1)*y1^2 + y2^2", "--point=-1,0,1,1"],
])
def test_input_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_INPUT and err


def test_verify_polar_pert(capsys, tmp_path):
    path = tmp_path / "v.json"
    code, out, _ = run(capsys, "verify", "--family", "polar-pert", "--samples", "50", "--seed", "7",
                       "--json", str(path), "--no-timestamp")
    assert code == EXIT_OK and "overall: PASS" in out
    rep = load(path)
    assert rep["schema_version"] == 1 and rep["overall"] is True and "timestamp" not in rep
    assert rep["config"]["seed"] == 7 and rep["config"]["samples"] == 50
    names = [c["name"] for c in rep["checks"]]
    assert len(names) == len(set(names))
    for c in rep["checks"]:
        assert {"name", "residual", "tolerance", "passed", "skipped"} <= set(c)


def test_verify_flat_includes_homogeneous_check(capsys, tmp_path):
    path = tmp_path / "v.json"
    assert run(capsys, "verify", "--family", "flat", "--samples", "10", "--json", str(path))[0] == EXIT_OK
    rep = load(path)
    homog = [c for c in rep["checks"] if c["name"] == "homogeneous_case"][0]
    assert homog["passed"] and not homog["skipped"]
    assert rep["results"]["homogeneity_degree"] == pytest.approx(2.0)
    assert "timestamp" in rep


def test_verify_pert_skips_homogeneous_check(capsys, tmp_path):
    path = tmp_path / "v.json"
    assert run(capsys, "verify", "--family", "pert", "--samples", "10", "--json", str(path))[0] == EXIT_OK
    homog = [c for c in load(path)["checks"] if c["name"] == "homogeneous_case"][0]
    assert homog["skipped"] and homog["reason"] == "NotHomogeneous"


def test_verify_failure_still_writes_report(capsys, tmp_path):
    # a tolerance below round-off makes the identity checks fail
    path = tmp_path / "v.json"
    code, out, _ = run(capsys, "verify", "--family", "polar-pert", "--samples", "10",
                       "--tol", "1e-300", "--json", str(path))
    assert code == EXIT_FAIL and "overall: FAIL" in out
    assert load(path)["overall"] is False


def test_verify_deterministic(capsys, tmp_path):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        run(capsys, "verify", "--family", "quartic", "--samples", "20", "--seed", "3",
            "--json", str(p), "--no-timestamp")
    assert paths[0].read_bytes() == paths[1].read_bytes()
    run(capsys, "verify", "--family", "quartic", "--samples", "20", "--seed", "4",
        "--json", str(paths[1]), "--no-timestamp")
    assert paths[0].read_bytes() != paths[1].read_bytes()


def test_verify_custom_expression_box(capsys, tmp_path):
    path = tmp_path / "v.json"
    code, _, _ = run(capsys, "verify", "--dim", "3", "--lagrangian", "y1^2 + exp(x1)*y2^2 + y3^2 + x2*y3",
                     "--box=-1:1,-1:1,-1:1", "--samples", "5", "--json", str(path))
    assert code == EXIT_OK
    assert load(path)["config"]["box"]["x_low"] == [-1.0, -1.0, -1.0]


def test_flow_polar(capsys, tmp_path):
    path = tmp_path / "f.json"
    code, out, _ = run(capsys, "flow", "--family", "polar", "--json", str(path), "--csv", str(tmp_path / "p"))
    assert code == EXIT_OK and "coincide = True" in out
    res = load(path)["results"]
    assert res["coincide"] is True and res["max_gap"] < 1e-8
    assert res["semispray"]["drift"]["E_max_rel"] < 1e-10
    for f in res["csv"]:
        with open(f, encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["t", "x1", "x2", "y1", "y2", "L", "E", "SL", "dhL_max"] and len(rows) == 1002


def test_flow_pert_drift(capsys, tmp_path):
    path = tmp_path / "f.json"
    assert run(capsys, "flow", "--family", "pert", "--json", str(path))[0] == EXIT_OK
    drift = load(path)["results"]["semispray"]["drift"]
    assert drift["L_final"] == pytest.approx(2.0, abs=1e-8)


def test_flow_polar_pert_gap(capsys, tmp_path):
    # both curves are integral curves of the same vector field here (hS = S)
    path = tmp_path / "f.json"
    assert run(capsys, "flow", "--family", "polar-pert", "--step", "1e-2", "--json", str(path))[0] == EXIT_OK
    res = load(path)["results"]
    assert res["max_gap"] <= 1e-12 and res["coincide"] is True


def test_flow_truncation_flagged(capsys, tmp_path):
    path = tmp_path / "f.json"
    code, out, _ = run(capsys, "flow", "--dim", "1", "--lagrangian", "exp(x1)*y1^2", "--point", "0,1",
                       "--step", "0.01", "--t-end", "20", "--json", str(path))
    assert code == EXIT_OK and "TRUNCATED" in out
    assert load(path)["results"]["semispray"]["truncated"] is True


@pytest.mark.parametrize("family,expected", [
    ("polar-linear-phi", [-1.0, -1.0]),
    ("flat-quadratic-phi", [6.0, 0.0]),
    ("null-control", [0.0, 0.0]),
    ("homogeneous-control", [0.0, 0.0]),
])
def test_counterexample_families(capsys, tmp_path, family, expected):
    path = tmp_path / "c.json"
    code, out, _ = run(capsys, "counterexample", "--family", family, "--json", str(path))
    assert code == EXIT_OK and "overall: PASS" in out
    rep = load(path)
    assert rep["results"]["witness_dhL"] == pytest.approx(expected, abs=1e-12)
    structure = [c for c in rep["checks"] if c["name"] == "structure_sharing"][0]
    assert structure["residual"] < 1e-9
    if family == "null-control":
        assert max(rep["results"]["obstruction_max_per_point"]) == 0.0


def test_counterexample_custom_without_witness(capsys):
    # flat metric with a linear potential gives no witness, so a custom family claiming one fails
    code, _, _ = run(capsys, "counterexample", "--family", "custom", "--metric", "1,0;0,1", "--phi", "x1 - x2")
    assert code == EXIT_FAIL
    code, _, _ = run(capsys, "counterexample", "--family", "custom", "--metric", "1,0;0,1", "--phi", "x1*x2")
    assert code == EXIT_OK


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "lagrangekit", "inspect", "--family", "flat",
                           "--point", "0,0,3,4"], capture_output=True, text=True)
    assert proc.returncode == 0 and "theta" in proc.stdout


def test_flow_csv_creates_directories(capsys, tmp_path):
    prefix = tmp_path / "nested" / "dir" / "run.csv"
    assert run(capsys, "flow", "--family", "flat", "--step", "0.1", "--csv", str(prefix))[0] == EXIT_OK
    assert (tmp_path / "nested" / "dir" / "run_semispray.csv").exists()
    assert (tmp_path / "nested" / "dir" / "run_horizontal.csv").exists()


def test_unwritable_report_is_input_error(capsys, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, err = run(capsys, "verify", "--family", "flat", "--samples", "2", "--json", str(blocker / "r.json"))
    assert code == EXIT_INPUT and "output error" in err
