import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from nambuflow.cli import main

sys.path.insert(0, str(Path(__file__).resolve().parent / "golden"))
from cases import CASES, HERE, run_case  # noqa: E402


def _files(d):
    return {p.name: p.read_bytes() for p in sorted(Path(d).iterdir())}


@pytest.mark.parametrize("name", list(CASES))
def test_golden(name, tmp_path):
    rc, out = run_case(name, tmp_path)
    assert rc == 0
    assert _files(out) == _files(HERE / name)


@pytest.mark.parametrize("name", ["flow_circle", "toda_ones", "compare_diagonal"])
def test_repeat_runs_byte_identical(name, tmp_path):
    _, a = run_case(name, tmp_path / "a")
    _, b = run_case(name, tmp_path / "b")
    assert _files(a) == _files(b)


def test_seeded_runs_deterministic(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"family": "symmetric", "n": 4, "seed": 17, "t_span": [0, 0.2], "samples": 4}))
    assert main(["flow", "run", str(cfg), "--out-dir", str(tmp_path / "a"), "--quiet"]) == 0
    assert main(["flow", "run", str(cfg), "--out-dir", str(tmp_path / "b"), "--quiet"]) == 0
    assert _files(tmp_path / "a") == _files(tmp_path / "b")


def test_csv_format(tmp_path):
    _, out = run_case("flow_circle", tmp_path)
    raw = (out / "trajectory.csv").read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    lines = raw.decode().splitlines()
    assert lines[0] == "t,X1,X2,X3,H1,H2"
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    assert rows.shape == (9, 6)
    # %.17g round-trips doubles exactly
    for v in rows.ravel():
        assert float("%.17g" % v) == v
    np.testing.assert_allclose(rows[:, 4:], [[3.0, 2.0]] * 9, atol=1e-9)


def test_json_table_format(tmp_path):
    _, out = run_case("flow_euler_json", tmp_path)
    doc = json.loads((out / "trajectory.json").read_text())
    assert doc["columns"] == ["t", "X1", "X2", "X3", "H1", "H2"] and len(doc["rows"]) == 5


def test_n2_straight_line(tmp_path):
    _, out = run_case("flow_n2_line", tmp_path)
    last = (out / "trajectory.csv").read_text().splitlines()[-1].split(",")
    np.testing.assert_allclose([float(v) for v in last[1:3]], [-1.0, 2.0], atol=1e-14)


def test_toda_zero_steps_single_row(tmp_path):
    _, out = run_case("toda_seeded_zero_steps", tmp_path)
    lines = (out / "toda.csv").read_text().splitlines()
    assert lines[0] == "step,x1,x2,x3,x4,structure_residual" and len(lines) == 2


def _run(tmp_path, cmd, cfg, *flags):
    path = tmp_path / "cfg.json"
    path.write_text(cfg if isinstance(cfg, str) else json.dumps(cfg))
    return main(cmd + [str(path), "--out-dir", str(tmp_path / "out"), "--quiet", *flags])


@pytest.mark.parametrize("cmd, cfg", [
    (["flow", "run"], {"family": "symmetric", "n": 3, "bogus": 1}),
    (["flow", "run"], {"family": "cubic", "n": 3}),
    (["flow", "run"], {"family": "symmetric", "n": 3, "constants": [3, 2], "X0": [1, 2, 3]}),
    (["flow", "run"], {"family": "diagonal", "n": 2}),
    (["flow", "run"], "{not json"),
    (["flow", "compare"], {"family": "x2free-n3", "constants": [3, 5]}),
    (["flow", "compare"], {"family": "symmetric-n3", "constants": [1, 1]}),
    (["disc"], {"n": 6, "constants": [1, 2, 3, 4, 5]}),
    (["toda", "run"], {"m": 3}),
    (["toda", "run"], {"m": 3, "seed": 1, "state": {"i": [1, 1, 1], "v": [1, 1, 1]}}),
])
def test_config_errors_exit_2(tmp_path, cmd, cfg):
    assert _run(tmp_path, cmd, cfg) == 2


def test_missing_config_exit_2(tmp_path):
    assert main(["disc", str(tmp_path / "nope.json"), "--quiet"]) == 2


@pytest.mark.parametrize("cmd, cfg", [
    (["toda", "run"], {"m": 3, "state": {"i": [1, 1, -1], "v": [1, 1, 1]}, "steps": 2}),
    (["flow", "run"], {"family": "symmetric", "n": 3, "constants": [3, 2], "tolerances": {"max_steps": 3}}),
    (["flow", "compare"], {"family": "diagonal-n3", "constants": [2, 1], "t_span": [0, 1], "samples": 9,
                           "tolerance": 1e-16}),
])
def test_numerical_failures_exit_3(tmp_path, cmd, cfg):
    assert _run(tmp_path, cmd, cfg) == 3


@pytest.mark.parametrize("family, constants", [
    ("symmetric-n3", [3, 2]), ("diagonal-n3", [2, 1]), ("x2free-n3", [3, 0.5]),
])
def test_compare_default_spans_pass(tmp_path, family, constants):
    assert _run(tmp_path, ["flow", "compare"], {"family": family, "constants": constants, "samples": 64}) == 0
    rep = json.loads((tmp_path / "out" / "compare_report.json").read_text())
    assert rep["passed"] and rep["max_deviation"] < 1e-6


def test_module_entry_point_and_log_env(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"m": 3, "seed": 2, "steps": 3}))
    env = dict(os.environ, NAMBU_LOG="debug")
    res = subprocess.run([sys.executable, "-m", "nambuflow", "toda", "run", str(cfg), "--out-dir",
                          str(tmp_path / "o")], env=env, capture_output=True, text=True)
    assert res.returncode == 0
    assert (tmp_path / "o" / "toda.csv").exists()
    res = subprocess.run([sys.executable, "-m", "nambuflow", "toda", "run", str(tmp_path / "missing.json")],
                         capture_output=True, text=True)
    assert res.returncode == 2 and res.stderr
