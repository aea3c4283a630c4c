import json

import numpy as np
import pytest

from hyperwave.cli import EXIT_CONFIG, EXIT_GATE, EXIT_OK, EXIT_SOLVER, main
from hyperwave.grid import Grid
from hyperwave.io import load_field

BASE = {"grid": {"d": 1, "n": 12, "T": 0.4, "m": 48},
        "dictionary": [{"family": "saturating", "params": {"a": 1.0, "b": 0.2, "eps": 0.5},
                        "weight": {"type": "partition", "index": k, "of": 2}} for k in range(2)],
        "alpha": [1.0, 1.3], "direction": [0.5, -0.4]}


@pytest.fixture
def config(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(BASE))
    return p


def _cfg(tmp_path, **over):
    p = tmp_path / "o.json"
    p.write_text(json.dumps({**BASE, **over}))
    return str(p)


def test_forward_writes_field(tmp_path, config, capsys):
    out = tmp_path / "u.hwf"
    assert main(["forward", "--config", str(config), "--out", str(out), "--report", str(tmp_path / "r")]) == EXIT_OK
    u, hdr = load_field(out, Grid(1, 12, 0.4, 48))
    assert u.shape == (49, 12, 1)
    assert "cfl" in json.loads(capsys.readouterr().out)
    assert (tmp_path / "r" / "energy.csv").exists()


def test_derivative_and_adjoint(tmp_path, config, capsys):
    assert main(["derivative", "--config", str(config), "--out", str(tmp_path / "v.hwf")]) == EXIT_OK
    capsys.readouterr()
    assert main(["adjoint", "--config", str(config)]) == EXIT_OK
    gd = json.loads(capsys.readouterr().out)["gradient"]
    assert main(["adjoint", "--config", str(config), "--method", "continuous"]) == EXIT_OK
    gc = json.loads(capsys.readouterr().out)["gradient"]
    assert np.allclose(gd, gc, rtol=5e-3)


def test_invert_and_resume(tmp_path, capsys):
    cfg = _cfg(tmp_path, inversion={"max_iter": 3, "noise": 0.0}, alpha0=[1.0, 1.0])
    rep = tmp_path / "inv"
    assert main(["invert", "--config", cfg, "--report", str(rep)]) == EXIT_OK
    first = json.loads((rep / "trace.json").read_text())
    assert len(first["alpha"]) == 4
    cfg = _cfg(tmp_path, inversion={"max_iter": 6, "noise": 0.0}, alpha0=[1.0, 1.0])
    assert main(["invert", "--config", cfg, "--report", str(rep), "--resume", str(rep / "trace.json")]) == EXIT_OK
    resumed = json.loads((rep / "trace.json").read_text())
    assert len(resumed["alpha"]) == 7
    assert resumed["alpha"][:3] == first["alpha"][:3]
    assert (rep / "report.json").exists() and (rep / "trace.csv").exists()


def test_verify_config_suites(tmp_path, config, capsys):
    rep = tmp_path / "v"
    assert main(["verify", "--suite", "all", "--config", str(config), "--report", str(rep)]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["taylor_slope"] > 1.4 and summary["adjoint_mismatch"] < 1e-10
    assert {"taylor.csv", "lipschitz.csv", "gronwall.csv", "report.json"} <= {p.name for p in rep.iterdir()}


def test_verify_gate_failure(tmp_path):
    # remainders this small sit at round-off, so the fitted order collapses
    cfg = _cfg(tmp_path, verify={"s_list": [1e-9, 1e-10, 1e-11]})
    assert main(["verify", "--suite", "taylor", "--config", cfg]) == EXIT_GATE


def test_config_error_exit(tmp_path, capsys):
    cfg = _cfg(tmp_path, alpha=[-1.0, 1.0], grid={"d": 1, "n": 0, "T": 1, "m": 4})
    assert main(["forward", "--config", cfg, "--out", str(tmp_path / "x")]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "/alpha/0" in err and "/grid/n" in err


def test_solver_error_exit(tmp_path, capsys):
    cfg = _cfg(tmp_path, grid={"d": 1, "n": 12, "T": 0.4, "m": 4})
    assert main(["forward", "--config", cfg, "--out", str(tmp_path / "x")]) == EXIT_SOLVER
    assert "CFL" in capsys.readouterr().err


def test_field_error_exit(tmp_path):
    bad = tmp_path / "bad.hwf"
    bad.write_bytes(b"garbage")
    cfg = _cfg(tmp_path, initial={"u0": {"file": str(bad)}})
    assert main(["forward", "--config", cfg, "--out", str(tmp_path / "x")]) == EXIT_CONFIG


def test_verify_without_config_for_named_suite(tmp_path):
    assert main(["verify", "--suite", "taylor"]) == EXIT_CONFIG


def test_invert_with_data_file_and_result(tmp_path, config, capsys):
    field = tmp_path / "u.hwf"
    assert main(["forward", "--config", str(config), "--out", str(field)]) == EXIT_OK
    cfg = _cfg(tmp_path, inversion={"max_iter": 2}, alpha0=[1.0, 1.0])
    result = tmp_path / "result.json"
    assert main(["invert", "--config", cfg, "--data", str(field), "--out", str(result),
                 "--report", str(tmp_path / "r")]) == EXIT_OK
    res = json.loads(result.read_text())
    assert res["status"] == "max_iter" and len(res["alpha"]) == 2 and "trace" in res
    assert "relative_error" not in res
