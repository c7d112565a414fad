import json

import numpy as np
import pytest

from nandwalk.circuits import build_walk_step
from nandwalk.cli import main
from nandwalk.sim import StateVector, apply_circuit
from nandwalk.tree import TreeShape


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_build_walk_step(capsys):
    code, out, _ = run(capsys, "build", "walk-step", "--levels", "2")
    assert code == 0
    circ = json.loads(out)
    assert circ["num_qubits"] == 5


def test_eval_exact(capsys):
    code, out, _ = run(capsys, "eval", "--leaves", "11", "--exact")
    assert (code, out.strip()) == (0, "0")
    code, out, _ = run(capsys, "eval", "--leaves", "01", "--exact", "--format", "json")
    assert code == 0 and json.loads(out)["value"] == 1


def test_eval_qpe_is_seeded(capsys):
    a = run(capsys, "eval", "--leaves", "0110", "--shots", "50", "--seed", "3", "--format", "json")[1]
    b = run(capsys, "eval", "--leaves", "0110", "--shots", "50", "--seed", "3", "--format", "json")[1]
    assert a == b


def test_calibrate(capsys, tmp_path):
    rule = tmp_path / "rule.json"
    code, _, _ = run(capsys, "calibrate", "--levels", "2", "--out", str(rule))
    assert code == 0
    code, out, _ = run(capsys, "eval", "--leaves", "10", "--exact", "--rule", str(rule))
    assert (code, out.strip()) == (0, "1")


def test_calibration_failure_exit_code(capsys):
    code, _, err = run(capsys, "calibrate", "--levels", "2", "--initial", "tail-root")
    assert code == 2
    assert "evaluation failed" in err


def test_usage_errors(capsys):
    assert run(capsys, "eval", "--bogus")[0] == 1
    assert run(capsys, "eval", "--leaves", "011", "--exact")[0] == 1
    assert run(capsys, "eval", "--levels", "3", "--leaves", "01", "--exact")[0] == 1
    with pytest.raises(SystemExit) as e:
        main(["--help"])
    assert e.value.code == 0


def test_build_then_simulate_round_trip(capsys, tmp_path):
    path = tmp_path / "step.json"
    assert run(capsys, "build", "walk-step", "--levels", "3", "--out", str(path))[0] == 0
    code, out, _ = run(capsys, "simulate", str(path), "--vertex", "2", "--coin", "left")
    assert code == 0
    got = {int(k): complex(*v) for k, v in json.loads(out)["amplitudes"].items()}
    circ = build_walk_step(TreeShape(3))
    start = 2 | 0b10 << 4
    want = apply_circuit(StateVector.basis(circ.num_qubits, start), circ).amplitudes
    nz = {int(i): want[i] for i in np.flatnonzero(np.abs(want) > 1e-12)}
    assert got.keys() == nz.keys()
    assert all(abs(got[k] - nz[k]) < 1e-12 for k in got)


def test_spectrum_csv(capsys):
    code, out, _ = run(capsys, "spectrum", "--leaves", "11", "--format", "csv")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "phase,overlap" and len(lines) == 33


def test_train_log_is_reproducible(capsys, tmp_path):
    logs = []
    for i in range(2):
        log = tmp_path / f"log{i}.csv"
        args = ["train", "--generations", "2", "--population", "6", "--games", "3", "--hidden", "4",
                "--seed", "7", "--log", str(log), "--out", str(tmp_path / f"g{i}.json")]
        assert run(capsys, *args)[0] == 0
        logs.append(log.read_bytes())
    assert logs[0] == logs[1]
    assert logs[0].count(b"\n") == 4
    code, out, _ = run(capsys, "play", "--agent", str(tmp_path / "g0.json"), "--games", "5")
    assert code == 0 and 0 <= json.loads(out)["win_rate"] <= 1


def test_play_and_seed_env(capsys, monkeypatch):
    monkeypatch.setenv("NANDWALK_SEED", "5")
    a = run(capsys, "play", "--agent", "exact", "--format", "json")
    b = run(capsys, "play", "--agent", "exact", "--format", "json", "--seed", "5")
    assert a[0] == 0 and a[1] == b[1]
    assert json.loads(a[1])["winner"] in ("agent", "opponent")
    monkeypatch.setenv("NANDWALK_SEED", "x")
    assert run(capsys, "play")[0] == 1
