import csv
import json
import os

import numpy as np
import pytest

from levyscore.cli import main

TINY = """
[run]
seed = 777

[model]
alpha = 0.5

[drift]
name = "linear"
theta_lo = 0.1
theta_hi = 3.0

[simulation]
theta = 1.0
n_paths = 4000
step = 5e-3
chunk = 1000
activity_target = 30.0

[density]
y_lo = -1.0
y_hi = 2.0
y_n = 7

[score]
y = [0.5, 1.0]

[mle]
n_obs = 5
n_mc = 300
tol = 5e-2
n_scan = 5

[fisher]
n_draws = 400

[crlb]
n_replicas = 2
n_bias_pairs = 1
n_outer = 2
n_mc_fisher = 200
"""


@pytest.fixture()
def cfg_path(tmp_path):
    p = tmp_path / "tiny.toml"
    p.write_text(TINY)
    return str(p)


def _read_csv(path):
    with open(path) as fh:
        prologue = []
        pos = fh.tell()
        while True:
            line = fh.readline()
            if line.startswith("#"):
                prologue.append(line.rstrip("\n"))
                pos = fh.tell()
            else:
                fh.seek(pos)
                break
        rows = list(csv.DictReader(fh))
    return prologue, rows


def test_density_command(cfg_path, tmp_path):
    out = tmp_path / "o1"
    assert main(["density", "-c", cfg_path, "--out", str(out)]) == 0
    prologue, rows = _read_csv(out / "density.csv")
    assert any("config_hash" in line for line in prologue)
    assert any("seed = 777" in line for line in prologue)
    assert len(rows) == 7
    for row in rows:
        assert set(row) >= {"y", "p_rep1", "stderr_rep1", "p_rep2",
                            "stderr_rep2", "n_used", "n_dropped"}
        float(row["p_rep1"])  # parses as a float


def test_density_threads_byte_identical(cfg_path, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["density", "-c", cfg_path, "--out", str(a),
                 "--threads", "1"]) == 0
    assert main(["density", "-c", cfg_path, "--out", str(b),
                 "--threads", "3"]) == 0
    assert (a / "density.csv").read_bytes() == (b / "density.csv").read_bytes()


def test_simulate_command(cfg_path, tmp_path):
    out = tmp_path / "sim"
    assert main(["simulate", "-c", cfg_path, "--out", str(out)]) == 0
    _, rows = _read_csv(out / "simulate.csv")
    assert len(rows) == 4000
    cols = set(rows[0])
    assert {"x", "dx", "d2x", "d3x", "dth_x", "d_dth_x", "delta1",
            "d_delta1", "valid"} <= cols


def test_score_command(cfg_path, tmp_path):
    out = tmp_path / "sc"
    assert main(["score", "-c", cfg_path, "--out", str(out)]) == 0
    _, rows = _read_csv(out / "score.csv")
    assert [float(r["y"]) for r in rows] == [0.5, 1.0]
    for r in rows:
        assert float(r["ess"]) > 10
        assert float(r["stderr"]) > 0


def test_seed_override_changes_output(cfg_path, tmp_path):
    a, b = tmp_path / "s1", tmp_path / "s2"
    main(["density", "-c", cfg_path, "--out", str(a)])
    main(["density", "-c", cfg_path, "--out", str(b), "--seed", "778"])
    assert (a / "density.csv").read_bytes() != (b / "density.csv").read_bytes()


def test_mle_command(cfg_path, tmp_path):
    out = tmp_path / "m"
    assert main(["mle", "-c", cfg_path, "--out", str(out)]) == 0
    with open(out / "mle.json") as fh:
        rep = json.load(fh)
    assert rep["meta"]["command"] == "mle"
    assert "thread" not in json.dumps(rep["meta"])
    assert 0.1 <= rep["theta_hat"] <= 3.0
    assert rep["n_eval"] >= 5
    _, rows = _read_csv(out / "observations.csv")
    assert len(rows) == 6  # x0 plus five steps


def test_fisher_command(cfg_path, tmp_path):
    out = tmp_path / "f"
    assert main(["fisher", "-c", cfg_path, "--out", str(out)]) == 0
    with open(out / "fisher.json") as fh:
        rep = json.load(fh)
    assert rep["info"] > 0
    assert rep["n_draws"] == 400


def test_crlb_command_wiring(cfg_path, tmp_path):
    out = tmp_path / "c"
    assert main(["crlb", "-c", cfg_path, "--out", str(out)]) == 0
    with open(out / "crlb.json") as fh:
        rep = json.load(fh)
    assert rep["n_replicas"] == 2
    assert len(rep["theta_hats"]) == 2
    assert rep["bound"] > 0


def test_validate_command(cfg_path, tmp_path):
    out = tmp_path / "v"
    assert main(["validate", "-c", cfg_path, "--out", str(out)]) == 0
    with open(out / "validate.json") as fh:
        rep = json.load(fh)
    assert rep["passed"]
    for name, ok in rep["checks"].items():
        assert ok, name


def test_bad_usage(cfg_path, tmp_path):
    assert main(["density", "-c", str(tmp_path / "nope.toml")]) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text("[simulation]\ntheta = 1.0\n")  # missing sections
    assert main(["density", "-c", str(bad)]) == 2
    with pytest.raises(SystemExit):
        main(["no_such_command", "-c", cfg_path])
