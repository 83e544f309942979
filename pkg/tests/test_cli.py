import json
import subprocess
import sys

import numpy as np
import pytest

from hslab.cli import EXIT_CHECK, EXIT_NOCONV, EXIT_OK, EXIT_USAGE, main
from hslab.report import read_profile_table

MU3 = 1.8452701486440282


def run(tmp_path, *argv):
    return main([*argv, "--out-dir", str(tmp_path), "-q"])


def test_entry_point_usage_exit():
    out = subprocess.run([sys.executable, "-m", "hslab.cli", "solve-radial", "--dim", "3", "--s", "2.5"],
                         capture_output=True, text=True)
    assert out.returncode == EXIT_USAGE
    assert "s out of range" in out.stderr
    bad = subprocess.run([sys.executable, "-m", "hslab.cli", "solve-radial", "--bogus"], capture_output=True, text=True)
    assert bad.returncode == EXIT_USAGE and "usage" in bad.stderr


def test_solve_radial_shooting(tmp_path):
    rc = run(tmp_path, "solve-radial", "--dim", "3", "--s", "1.6667", "--tol", "1e-8", "-o", "prof.txt")
    assert rc == EXIT_OK
    meta, rows = read_profile_table((tmp_path / "prof.txt").read_text())
    assert meta["N"] == "3" and float(meta["s"]) == 1.6667 and meta["source"] == "shooting"
    assert float(meta["residual"]) < 1e-8
    assert rows[0, 1] > 0 and rows[-1, 1] == 0 and rows[0, 2] == 0


def test_solve_radial_closed_form_json(tmp_path):
    rc = run(tmp_path, "solve-radial", "--dim", "4", "--family", "4overN", "-o", "p.json")
    assert rc == EXIT_OK
    body = json.loads((tmp_path / "p.json").read_text())
    assert body["source"] == "closed_form" and body["params"]["N"] == 4


def test_verify_pohozaev(tmp_path):
    assert run(tmp_path, "verify", "pohozaev", "--dim", "3", "--s", "1.6667") == EXIT_OK
    rep = json.loads((tmp_path / "verify-pohozaev-N3.json").read_text())
    assert rep["passed"] and all(c["value"] < 1e-6 for c in rep["checks"] if c["name"].startswith("residual"))


def test_verify_failure_names_first_check(tmp_path, capsys):
    rc = run(tmp_path, "verify", "pohozaev", "--dim", "3", "--family", "2overN", "--tol", "1e-30")
    assert rc == EXIT_CHECK
    assert "FAILED: residual_main" in capsys.readouterr().err
    rep = json.loads((tmp_path / "verify-pohozaev-N3.json").read_text())
    assert rep["passed"] is False and rep["checks"][0]["passed"] is False


def test_verify_discriminant_threshold(tmp_path):
    rc = run(tmp_path, "verify", "discriminant", "--family", "2overN", "--scan", "3..40", "--jobs", "2")
    assert rc == EXIT_OK
    rep = json.loads((tmp_path / "verify-discriminant-explicit_2_over_N.json").read_text())
    flagged = [row["N"] for row in rep["rows"] if row["threshold"]]
    assert flagged == [18]


def test_verify_spectrum_csv(tmp_path):
    rc = run(tmp_path, "verify", "spectrum", "--dim", "3", "--family", "2overN", "--kmax", "4", "--format", "csv")
    assert rc == EXIT_OK
    table = (tmp_path / "verify-spectrum-N3-table.csv").read_text().splitlines()
    head = table[0].split(",")
    k1 = dict(zip(head, table[2].split(",")))
    assert k1["k"] == "1" and abs(float(k1["lambda1"]) - 5 / 3) < 1e-4
    assert "\r" not in (tmp_path / "verify-spectrum-N3.csv").read_text()


@pytest.mark.parametrize("domain,sign", [("kidney", -1), ("square", 1)])
def test_minimize_examples(tmp_path, domain, sign):
    assert run(tmp_path, "minimize", "--domain", domain, "--p", "3", "--h", "0.02") == EXIT_OK
    stem = f"minimize-{domain}-p3-h0.02"
    summary = json.loads((tmp_path / f"{stem}-summary.json").read_text())
    assert abs(summary["reference"] - MU3) < 1e-9
    assert (summary["gap"] < 0) if sign < 0 else (summary["gap"] >= 0)
    trace = np.loadtxt(tmp_path / f"{stem}-trace.csv", delimiter=",", skiprows=1)
    assert trace[-1, 1] == summary["mu_h"]
    assert (tmp_path / f"{stem}-solution.txt").read_text().startswith("# hslab mesh")


def test_minimize_errors(tmp_path, capsys):
    assert run(tmp_path, "minimize", "--domain", "hexagon") == EXIT_USAGE
    assert "unknown domain" in capsys.readouterr().err
    rc = run(tmp_path, "minimize", "--domain", "square", "--h", "0.2", "--max-iter", "2", "--tol", "1e-15")
    assert rc == EXIT_NOCONV
    rows = (tmp_path / "minimize-square-p3-h0.2-trace.csv").read_text().splitlines()
    assert rows[0] == "iteration,quotient" and len(rows) == 4


def test_hslab_out_and_config(tmp_path, monkeypatch):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[defaults]\nformat = csv\n\n[solve-radial]\ndim = 3\nfamily = 2overN\npoints = 5\n")
    out = tmp_path / "envout"
    monkeypatch.setenv("HSLAB_OUT", str(out))
    assert main(["solve-radial", "--config", str(cfg), "-q"]) == EXIT_OK
    lines = (out / "profile-N3.csv").read_text().splitlines()
    assert lines[0] == "r,U,dU" and len(lines) == 6
    # flags override the file
    assert main(["solve-radial", "--config", str(cfg), "--points", "3", "-q", "--format", "json"]) == EXIT_OK
    assert len(json.loads((out / "profile-N3.json").read_text())["r"]) == 3


def test_reports_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(d, "verify", "planar", "--samples", "40") == EXIT_OK
        assert run(d, "solve-radial", "--dim", "5", "--s", "0.5") == EXIT_OK
    for name in ("verify-planar.json", "profile-N5.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_usage_errors(tmp_path):
    assert run(tmp_path, "verify", "pohozaev", "--dim", "3", "--s", "1", "--format", "txt") == EXIT_USAGE
    assert run(tmp_path, "verify", "discriminant", "--family", "2overN", "--jobs", "0") == EXIT_USAGE
    assert run(tmp_path, "solve-radial", "--dim", "3", "--family", "7overN") == EXIT_USAGE
    assert run(tmp_path, "solve-radial", "--config", str(tmp_path / "missing.ini")) == EXIT_USAGE
