import json
from pathlib import Path

import pytest

from kmtheta.cli import main

DATA = Path(__file__).resolve().parent.parent / "data"


def test_inspect_exit_codes(capsys):
    assert main(["inspect", "--input", str(DATA / "sig12.json")]) == 0
    assert "profile: PASS" in capsys.readouterr().out
    assert main(["inspect", "--input", str(DATA / "definite3.json")]) == 2
    assert "MISMATCH" in capsys.readouterr().out


def test_bad_inputs(tmp_path, capsys):
    assert main(["inspect", "--input", str(DATA / "asymmetric.json")]) == 2
    assert main(["theta"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["theta", "--input", str(bad)]) == 2
    assert main(["theta", "--input", str(DATA / "sig12.json"), "--epsilon", "-1"]) == 2
    capsys.readouterr()


def test_theta_e8_csv(tmp_path):
    out = tmp_path / "e8.csv"
    assert main(["theta", "--input", str(DATA / "e8.json"), "--output", str(out), "--radius", "3"]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "T_key,component,re,im"
    assert rows[1:5] == ["0,,1.0,0.0", "1,,240.0,0.0", "2,,2160.0,0.0", "3,,6720.0,0.0"]


def test_theta_rerun_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["theta", "--input", str(DATA / "sig12.json"), "--output", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[-1].startswith("#radius,")


def test_theta_quadratic_field(tmp_path):
    out = tmp_path / "k5.csv"
    assert main(["theta", "--input", str(DATA / "sqrt5_mixed.json"), "--output", str(out), "--epsilon", "1e-4"]) == 0
    assert len(out.read_text().splitlines()) > 2


def test_theta_budget_exit(tmp_path, capsys):
    assert main(["theta", "--input", str(DATA / "sig12.json"), "--radius", "1e6",
                 "--output", str(tmp_path / "x.csv")]) == 3
    capsys.readouterr()


def test_check_json(tmp_path):
    out = tmp_path / "check.json"
    assert main(["check", "--input", str(DATA / "sig12.json"), "--output", str(out), "--grid", "5"]) == 0
    rep = json.loads(out.read_text())
    assert rep["passed"] and not rep["failed"]
    names = {r["name"] for r in rep["results"]}
    assert {"exp_integral", "translation", "ddc", "counting_exponent"} <= names


def test_green_diagnostics(tmp_path, capsys):
    out = tmp_path / "conv.csv"
    assert main(["green-diagnostics", "--input", str(DATA / "sig12.json"), "--output", str(out)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["cauchy"] and summary["ratio_max"] < 1
    assert out.read_text().splitlines()[0] == "radius,partial_sum,tail_estimate"
    assert main(["green-diagnostics", "--input", str(DATA / "e8.json")]) == 2
    capsys.readouterr()


def test_count_R(tmp_path, capsys):
    out = tmp_path / "count.csv"
    assert main(["count-R", "--input", str(DATA / "sig12.json"), "--output", str(out), "--grid", "6"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "N,count,level_set_count" and len(lines) == 7
    assert "exponent" in capsys.readouterr().err


def test_selftest(capsys):
    assert main(["selftest"]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_module_entry_point():
    import subprocess
    import sys
    res = subprocess.run([sys.executable, "-m", "kmtheta", "inspect", "--input", str(DATA / "e8.json")],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "profile: PASS" in res.stdout
