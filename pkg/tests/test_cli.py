import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from superdelta import acceptance, cli

SPECS = Path(__file__).resolve().parent.parent / "specs"


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check_jacobi_darboux(capsys, tmp_path):
    out_file = tmp_path / "r.jsonl"
    code, out, _ = run(capsys, "check-jacobi", SPECS / "darboux.sd", "E", "--out", out_file)
    assert code == 0
    assert "PASS  jacobi" in out
    recs = [json.loads(l) for l in out_file.read_text().splitlines()]
    assert len(recs) == 1
    assert set(recs[0]) == {"command", "check", "verdict", "detail", "inputs"}
    assert recs[0]["command"] == "check-jacobi"
    assert recs[0]["verdict"] == "pass"
    assert "tensor=E" in recs[0]["inputs"]


def test_out_before_subcommand(capsys, tmp_path):
    out_file = tmp_path / "r.jsonl"
    code, _, _ = run(capsys, "--out", out_file, "check-jacobi", SPECS / "darboux.sd", "E")
    assert code == 0
    assert out_file.read_text().count("\n") == 1


def test_non_jacobi_exits_one(capsys):
    code, out, _ = run(capsys, "koszul", SPECS / "koszul.sd", "Q")
    assert code == 1
    assert "FAIL" in out


def test_modular_field_odd_time(capsys):
    code, out, _ = run(capsys, "modular-field", SPECS / "odd_time.sd", "eta")
    assert code == 0
    assert "nontrivial=true" in out
    assert "1/8[eta,eta]" in out


def test_transform_bering(capsys):
    code, out, _ = run(capsys, "transform", SPECS / "darboux2.sd", "E", "--change", "phi", "--bering")
    assert code == 0
    assert "PASS  bering-covariance" in out


@pytest.mark.parametrize("argv", [
    ("build-delta", "darboux.sd", "E", "--volume", "rho"),
    ("build-delta", "darboux.sd", "E", "--bering"),
    ("delta-square", "darboux2.sd", "E"),
    ("modular-field", "darboux.sd", "E"),
    ("odd-time", "odd_time.sd", "eta"),
    ("koszul", "koszul.sd", "P"),
    ("nijenhuis", "nijenhuis.sd", "X"),
    ("nijenhuis", "nijenhuis.sd", "X", "Y"),
    ("transform", "darboux.sd", "rho", "--change", "phi"),
])
def test_commands_pass(capsys, argv):
    cmd, spec, *rest = argv
    code, out, _ = run(capsys, cmd, SPECS / spec, *rest)
    assert code == 0, out


def test_parse_error_location(capsys, tmp_path):
    bad = tmp_path / "bad.sd"
    bad.write_text("[chart M]\nvars = q:even, th:odd\n[tensor E]\nchart = M\nq,th = q +* 1\n")
    code, _, err = run(capsys, "check-jacobi", bad, "E")
    assert code == 2
    assert f"{bad}:5:11: error:" in err


def test_unresolved_name(capsys):
    code, _, err = run(capsys, "check-jacobi", SPECS / "darboux.sd", "nope")
    assert code == 2
    assert "nope" in err


def test_precondition_failure_is_a_check(capsys, tmp_path):
    spec = tmp_path / "nj.sd"
    spec.write_text("[chart M]\nvars = x:even, th:odd\n[tensor E]\nchart = M\nx,th = x\nx,x = th\n")
    code, out, _ = run(capsys, "modular-field", spec, "E")
    assert code == 1
    assert "FAIL  jacobi" in out
    code, out, _ = run(capsys, "delta-square", spec, "E")
    assert code == 0
    assert "PASS  order  (order 3)" in out


def test_seed_override(monkeypatch, capsys, tmp_path):
    calls = []

    def fake(k, seed):
        calls.append(seed)
        return [acceptance.Check("selftest", f"{k}.fake", "pass", str(seed))]

    monkeypatch.setattr(acceptance, "CRITERIA", {1: None, 2: None})
    monkeypatch.setattr(acceptance, "run_criterion", fake)
    monkeypatch.setenv("SUPERDELTA_SEED", "77")
    out_file = tmp_path / "r.jsonl"
    code, out, _ = run(capsys, "selftest", "--seed", "5", "--out", out_file)
    assert code == 0
    assert set(calls) == {77}
    recs = [json.loads(l) for l in out_file.read_text().splitlines()]
    assert [r["check"] for r in recs] == ["1.fake", "2.fake", "13.determinism"]
    assert all(r["inputs"] == "seed=77" for r in recs)


def test_bad_seed_env(monkeypatch, capsys):
    monkeypatch.setenv("SUPERDELTA_SEED", "abc")
    code, _, err = run(capsys, "selftest")
    assert code == 2


def test_console_script_entry_point():
    exe = shutil.which("superdelta")
    cmd = [exe] if exe else [sys.executable, "-m", "superdelta.cli"]
    res = subprocess.run(cmd + ["check-jacobi", str(SPECS / "darboux.sd"), "E"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "PASS" in res.stdout
