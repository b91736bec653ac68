import csv
import io
import json
import os
import subprocess
import sys

import pytest

from hessianlab.cli import RunConfig, UsageError, main
from hessianlab.report import csv_columns, write_atomic

EXPSUM = """\
potential = exp(x1) + exp(x2)
n = 2
lo = -1
lo = -1
hi = 1
hi = 1
grid = 5
grid = 5
"""


def _cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _run(argv):
    buf = io.StringIO()
    code = main(argv, buf)
    return code, buf.getvalue()


def test_config_parsing():
    cfg = RunConfig.from_text(EXPSUM + "check = eq4\ncheck = prop1  # comment\nidentity_tol = 1e-7\n")
    assert cfg.n == 2 and cfg.lo == [-1.0, -1.0] and cfg.grid == [5, 5]
    assert cfg.checks == ["eq4", "prop1"]
    assert cfg.tolerances.identity_tol == 1e-7
    assert cfg.grid_spec.size == 25
    assert RunConfig.from_text(EXPSUM + "check = none\n").checks == []
    cfg = RunConfig.from_text("potential = -log(x1)\nn = 1\nlo = 0.5\nhi = 3\n")
    assert cfg.grid == [1]


@pytest.mark.parametrize("extra,msg", [
    ("bogus = 1\n", "unknown key"),
    ("n = 3\n", "duplicate"),
    ("check = eq99\n", "unknown checks"),
    ("format = xml\n", "format"),
    ("jet_order = 4\n", "jet_order"),
    ("jet_order = five\n", "bad config value"),
    ("garbage\n", "expected key"),
])
def test_config_errors(extra, msg):
    with pytest.raises(UsageError, match=msg):
        RunConfig.from_text(EXPSUM + extra)


def test_config_semantic_errors():
    with pytest.raises(UsageError, match="missing"):
        RunConfig.from_text("n = 1\nlo = 0\nhi = 1\n")
    with pytest.raises(UsageError):
        RunConfig.from_text("potential = x1 +\nn = 1\nlo = 0\nhi = 1\n")
    with pytest.raises(UsageError):
        RunConfig.from_text("potential = x3\nn = 2\nlo = 0\nhi = 1\n")
    with pytest.raises(UsageError):
        RunConfig.from_text("potential = x1\nn = 1\nlo = 1\nhi = 0\n")
    # jet order 4 is fine without Laplacian checks
    RunConfig.from_text(EXPSUM + "jet_order = 4\ncheck = identities\ncheck = ricci_bound\n")


def test_eval_output(tmp_path):
    code, out = _run(["eval", "--config", _cfg(tmp_path, EXPSUM), "--point", "0,0"])
    assert code == 0
    assert "Φ (Phi) = 0.125" in out
    assert "J = 0.25" in out
    assert "ρ (rho) = 1" in out


def test_eval_usage_errors(tmp_path):
    cfg = _cfg(tmp_path, EXPSUM)
    assert _run(["eval", "--config", cfg])[0] == 1
    assert _run(["eval", "--config", cfg, "--point", "5,0"])[0] == 1
    assert _run(["eval", "--config", cfg, "--point", "0"])[0] == 1
    assert _run(["eval", "--config", str(tmp_path / "missing.cfg"), "--point", "0,0"])[0] == 1
    with pytest.raises(SystemExit) as ei:
        main(["frobnicate", "--config", cfg])
    assert ei.value.code == 1


def test_eval_nonconvex_is_pipeline_error(tmp_path):
    cfg = _cfg(tmp_path, "potential = x1^3 + x2^2\nn = 2\nlo = -1\nhi = 1\n")
    assert _run(["eval", "--config", cfg, "--point", "-0.5,0"])[0] == 2


def test_verify_exit_codes(tmp_path):
    assert _run(["verify", "--config", _cfg(tmp_path, EXPSUM)])[0] == 0
    cubic = _cfg(tmp_path, "potential = x1^3 + x2^2\nn = 2\nlo = -1\nhi = 1\ngrid = 3\n", "c.cfg")
    code, out = _run(["verify", "--config", cubic])
    assert code == 2 and "NonConvexAt" in out
    strict = _cfg(tmp_path, EXPSUM + "check = identities\nidentity_tol = 1e-300\n", "s.cfg")
    code, out = _run(["verify", "--config", strict])
    assert code == 3


def test_sweep_csv(tmp_path):
    out_path = tmp_path / "res.csv"
    cfg = _cfg(tmp_path, EXPSUM)
    code, _ = _run(["sweep", "--config", cfg, "--out", str(out_path)])
    assert code == 0
    rows = list(csv.reader(out_path.open()))
    assert rows[0] == csv_columns(2)
    assert rows[0][:3] == ["x1", "x2", "rho"] and rows[0][-1] == "status"
    assert len(rows) == 26
    assert rows[1][:2] == ["-1", "-1"] and rows[2][:2] == ["-1", "-0.5"]
    assert all(r[-1] == "ok" for r in rows[1:])
    # residuals are printed with round-trip precision
    assert float(rows[13][2]) == 1.0


def test_sweep_json(tmp_path):
    out_path = tmp_path / "res.json"
    cfg = _cfg(tmp_path, EXPSUM)
    code, _ = _run(["sweep", "--config", cfg, "--out", str(out_path), "--format", "json",
                    "--check", "eq3", "--check", "prop2"])
    assert code == 0
    obj = json.loads(out_path.read_text())
    assert obj["schema"] == 1
    assert len(obj["rows"]) == 25
    assert set(obj["summary"]) == {"eq3", "prop2"}


def test_classify_cli(tmp_path):
    cfg = _cfg(tmp_path, "potential = -log(x1)\nn = 1\nlo = 0.5\nhi = 3\ngrid = 6\n")
    code, out = _run(["classify", "--config", cfg])
    assert code == 0 and "einstein a = -2.000000" in out


def test_oracle_cli(tmp_path):
    cfg = _cfg(tmp_path, EXPSUM + "seed = 7\n")
    code, out = _run(["oracle", "--config", cfg])
    assert code == 0 and "points=10" in out
    code, out = _run(["oracle", "--config", _cfg(tmp_path, EXPSUM, "g.cfg")])
    assert code == 0 and "points=9" in out  # the boundary ring has no room for the stencil
    assert _run(["oracle", "--config", cfg, "--point", "0.99,0"])[0] == 1


def test_write_atomic(tmp_path):
    target = tmp_path / "out.txt"
    target.write_text("old")
    write_atomic(str(target), "new")
    assert target.read_text() == "new"
    assert os.listdir(tmp_path) == ["out.txt"]


def test_console_script(tmp_path):
    r = subprocess.run([sys.executable, "-m", "hessianlab.cli", "verify", "--config", _cfg(tmp_path, EXPSUM)],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert "points=25 errors=0" in r.stdout
