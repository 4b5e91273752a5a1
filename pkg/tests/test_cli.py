"""Command line: config resolution, commands, exit codes, manifests."""

import json
from pathlib import Path

import numpy as np
import pytest

from kbmlab.cli.config import RunManifest, SimConfig, load_config_file
from kbmlab.cli.main import main
from kbmlab.errors import ConfigError


def test_config_file_parsing(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(
        """
# comment
metric.family = polynomial
metric.beta = 2.5
sde.dt = 0.0005
rng.seed = 42
sigma = 1.5
paths = 3
"""
    )
    values = load_config_file(p)
    assert values == {
        "metric_family": "polynomial", "metric_beta": 2.5, "dt": 0.0005,
        "seed": 42, "sigma": 1.5, "paths": 3,
    }
    bad = tmp_path / "bad.cfg"
    bad.write_text("unknown.key = 1\n")
    with pytest.raises(ConfigError):
        load_config_file(bad)


def test_config_validation():
    with pytest.raises(ConfigError):
        SimConfig(dt=0.5, horizon=10.0).validate()
    with pytest.raises(ConfigError):
        SimConfig(paths=0).validate()
    with pytest.raises(ConfigError):
        SimConfig(dim=2).validate("polar")
    SimConfig(dim=2, horizon=1.0, dt=1e-3).validate("h2")
    with pytest.raises(ConfigError):
        SimConfig(metric_family="polynomial").metric()


def test_cli_precedence(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("sigma = 2.0\nhorizon = 1.0\nsde.dt = 0.001\npaths = 1\n")
    out = tmp_path / "o"
    rc = main([
        "--config", str(cfg), "--sigma", "0.0", "--seed", "1",
        "--out", str(out), "simulate", "euclidean",
    ])
    assert rc == 0
    # sigma = 0 from the command line wins: the path is a straight line
    data = np.loadtxt(out / "trajectory_0.csv", delimiter=",", skiprows=1)
    assert data[-1, 1] == pytest.approx(1.0, abs=1e-12)


def test_cli_usage_error_exit_code(tmp_path):
    rc = main(["--dim", "2", "--out", str(tmp_path), "--horizon", "1.0",
               "--dt", "0.001", "simulate", "polar"])
    assert rc == 1


def test_simulate_manifest_and_determinism(tmp_path):
    args = ["--sigma", "1.0", "--dim", "3", "--horizon", "0.5", "--dt", "0.001",
            "--paths", "2", "--seed", "7", "--metric", "hyperbolic"]
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(out1), "simulate", "polar"]) == 0
    assert main(args + ["--out", str(out2), "simulate", "polar"]) == 0
    for k in range(2):
        b1 = (out1 / f"trajectory_{k}.csv").read_bytes()
        b2 = (out2 / f"trajectory_{k}.csv").read_bytes()
        assert b1 == b2
    man = json.loads((out1 / "manifest.json").read_text())
    assert man["command"] == "simulate polar"
    assert set(man["files"]) == {"trajectory_0.csv", "trajectory_1.csv"}
    assert man["config"]["sigma"] == 1.0


def test_simulate_thread_count_invariance(tmp_path):
    base = ["--sigma", "1.0", "--dim", "3", "--horizon", "0.3", "--dt", "0.001",
            "--paths", "3", "--seed", "3", "--stride", "10"]
    outs = []
    for threads, name in [("1", "t1"), ("4", "t4")]:
        out = tmp_path / name
        assert main(base + ["--threads", threads, "--out", str(out),
                            "simulate", "euclidean"]) == 0
        outs.append(out)
    for k in range(3):
        assert (outs[0] / f"trajectory_{k}.csv").read_bytes() == (
            outs[1] / f"trajectory_{k}.csv"
        ).read_bytes()


def test_manifest_hash_guard(tmp_path):
    man = RunManifest(config={}, command="x")
    f = tmp_path / "data.csv"
    f.write_text("1,2,3\n")
    man.add_file(f)
    man.finish(tmp_path)
    assert man.verify_files(tmp_path)
    f.write_text("corrupted\n")
    with pytest.raises(ConfigError):
        man.verify_files(tmp_path)


def test_verify_command_report_and_exit(tmp_path):
    out = tmp_path / "v"
    rc = main(["--out", str(out), "verify", "chen"])
    assert rc == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["check"] == "chen"
    assert rep["pass"] is True
    for part in rep["parts"]:
        assert {"statistic", "value", "target", "tolerance", "pass"} <= set(part)
    for key in ("seed", "dt", "n"):
        assert key in rep
    man = json.loads((out / "manifest.json").read_text())
    assert "report.json" in man["files"]


def test_verify_statistical_failure_exit_code(tmp_path, monkeypatch):
    from kbmlab.cli import checks

    def fake_check(seed=0):
        return {"check": "chen", "seed": 0, "dt": 1.0, "n": 1, "pass": False,
                "parts": [{"statistic": "x", "value": 1.0, "target": 0.0,
                           "tolerance": 0.1, "pass": False}]}

    monkeypatch.setitem(checks.VERIFY_CHECKS, "chen", fake_check)
    monkeypatch.setattr("kbmlab.cli.main.VERIFY_CHECKS", checks.VERIFY_CHECKS)
    rc = main(["--out", str(tmp_path / "f"), "verify", "chen"])
    assert rc == 2


def test_lift_roughpath_csv_schema(tmp_path):
    out = tmp_path / "lift"
    rc = main(["--sigma", "2.0", "--dim", "2", "--horizon", "4.0", "--dt", "0.002",
               "--seed", "11", "--out", str(out), "lift-roughpath", "--grid", "100"])
    assert rc == 0
    with open(out / "roughpath.csv") as fh:
        header = fh.readline().strip().split(",")
    assert header == ["t", "X_1", "X_2", "XX_11", "XX_12", "XX_21", "XX_22"]
    data = np.loadtxt(out / "roughpath.csv", delimiter=",", skiprows=1)
    # symmetric part identity at the terminal row
    X = data[-1, 1:3]
    XX = data[-1, 3:].reshape(2, 2)
    assert np.abs(0.5 * (XX + XX.T) - 0.5 * np.outer(X, X)).max() <= 1e-12


def test_develop_command_outputs(tmp_path):
    out = tmp_path / "dev"
    rc = main(["--sigma", "1.0", "--dim", "3", "--horizon", "1.0", "--dt", "0.001",
               "--seed", "2", "--metric", "hyperbolic", "--out", str(out), "develop"])
    assert rc == 0
    with open(out / "frames.csv") as fh:
        header = fh.readline().strip().split(",")
    # d x (d + 1) frame numbers per sample plus the time column
    assert len(header) == 1 + 3 * 4
    man = json.loads((out / "manifest.json").read_text())
    assert {"developed.csv", "frames.csv"} <= set(man["files"])
