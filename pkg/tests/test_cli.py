import json
import math
import subprocess
import sys

import pytest

from pitlab.cli import run_command
from pitlab.coeffs import make_rational_phase


def run(capsys, *argv):
    code = run_command(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_eval_json(capsys):
    code, out, _ = run(capsys, "eval", "--alpha", "1/2", "--z", "3,0")
    assert code == 0
    d = json.loads(out)
    assert d["re"] == pytest.approx(math.exp(-3), abs=1e-16)
    assert d["truncation_bound"] + d["rounding_bound"] < 1e-15


def test_eval_tolerance_override(capsys):
    code, out, _ = run(capsys, "eval", "--z", "2,1", "--tolerance", "1e-40", "--precision-bits", "256")
    assert code == 0
    d = json.loads(out)
    assert d["precision_bits"] == 256 and d["truncation_bound"] <= 1e-40


def test_trigsum_half(capsys):
    code, out, _ = run(capsys, "trigsum", "--p", "1", "--q", "2", "--check-points", "50")
    assert code == 0
    d = json.loads(out)
    assert len(d["terms"]) == 1
    assert d["terms"][0]["b"] == pytest.approx([-1.0, 0.0])
    assert d["check"]["failures"] == 0


def test_zeros_csv_and_determinism(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "zeros", "--alpha", "sqrt2", "--rmax", "30", "--out", str(a))[0] == 0
    assert run(capsys, "zeros", "--alpha", "sqrt2", "--rmax", "30", "--out", str(b))[0] == 0
    lines = a.read_text().splitlines()
    assert lines[0] == "re,im,multiplicity,newton_residual,enclosure_radius"
    assert abs(len(lines) - 1 - 30) <= 6
    assert a.read_bytes() == b.read_bytes()


def test_zeros_json_sector(capsys, tmp_path):
    out = tmp_path / "z.json"
    code, _, _ = run(capsys, "zeros", "--alpha", "sqrt2", "--rmin", "5", "--rmax", "15", "--sector", "0,1.5",
                     "--out", str(out))
    assert code == 0
    d = json.loads(out.read_text())
    assert d["completeness_certificate"] is True


def test_grid_csv(capsys):
    code, out, _ = run(capsys, "grid", "--alpha", "0", "--rmin", "10", "--rmax", "10", "--nr", "1", "--ntheta", "8")
    assert code == 0
    rows = [r.split(",") for r in out.splitlines()[1:]]
    by_theta = {round(float(r[1]), 12): float(r[2]) for r in rows}
    assert by_theta[0.0] == pytest.approx(10.0)
    assert by_theta[round(-math.pi, 12)] == pytest.approx(-10.0)


def test_indicator_ratio_pits(capsys, tmp_path):
    code, out, _ = run(capsys, "indicator", "--alpha", "sqrt2", "--rwindow", "10,20", "--ntheta", "64")
    assert code == 0 and out.startswith("theta,h_est,n_samples,indeterminate")
    code, out, _ = run(capsys, "ratio", "--alpha", "1/3", "--r", "10,20")
    assert code == 0 and len(out.splitlines()) == 3
    pits = tmp_path / "p.json"
    code, out, _ = run(capsys, "pits", "--delta", "0.3", "--eta", "0.5", "--rmin", "10", "--rmax", "11",
                       "--dr", "0.25", "--ntheta", "256", "--out", str(pits))
    assert code == 0
    assert isinstance(json.loads(pits.read_text()), list)
    assert "covering_sum" in json.loads(out)


def test_config_supplies_family_and_defaults(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"family": make_rational_phase(1, 2).to_dict(), "tolerance": 1e-30}))
    code, out, err = run(capsys, "eval", "--config", str(cfg), "--z", "3,0")
    assert code == 0, err
    d = json.loads(out)
    assert d["re"] == pytest.approx(math.exp(-3), abs=1e-16)
    assert d["truncation_bound"] <= 1e-30


def test_bad_config_exit_2(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text("{not json")
    assert run(capsys, "eval", "--config", str(cfg), "--z", "1,0")[0] == 2
    cfg.write_text(json.dumps({"family": {"phase": {}}}))
    assert run(capsys, "eval", "--config", str(cfg), "--z", "1,0")[0] == 2


@pytest.mark.parametrize("argv", [
    ["eval"],
    ["eval", "--z", "abc"],
    ["eval", "--alpha", "nan", "--z", "1,1"],
    ["nosuch"],
    ["eval", "--config", "/nonexistent.json", "--z", "1,1"],
    ["indicator", "--rwindow", "10,12"],
])
def test_usage_errors_exit_2_with_json(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    rec = json.loads(err.strip().splitlines()[-1])
    assert rec["exit_code"] == 2 and rec["error"] and rec["message"]


def test_verify_subset(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "quick", "--criteria", "1,4")
    assert code == 0
    assert out.count("[PASS]") == 2


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "pitlab", "eval", "--alpha", "0", "--z", "1,0"],
                       capture_output=True, text=True, timeout=120)
    assert p.returncode == 0
    assert json.loads(p.stdout)["re"] == pytest.approx(math.e, abs=1e-15)
