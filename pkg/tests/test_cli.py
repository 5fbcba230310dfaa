import json
import subprocess
import sys

import pytest

from noisy_tomography import learners
from noisy_tomography.experiments.cli import main


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = write(tmp_path / "bad.json", {"experiment": "qst_sweep", "trials": 0})
    assert main(["qst", "--config", cfg]) == 2
    assert "trials" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["qst", "--config", str(tmp_path / "absent.json")]) == 2


def test_config_for_wrong_command(tmp_path):
    cfg = write(tmp_path / "c.json", {"experiment": "zne"})
    assert main(["qst", "--config", cfg]) == 2


def test_lower_bound_command(capsys):
    assert main(["lower-bound", "--gamma", "0.1", "--depth", "10", "--n", "4", "--format", "json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["m"] == pytest.approx(0.1429, abs=5e-5)
    assert main(["lower-bound", "--gamma", "1.2", "--depth", "10", "--n", "4"]) == 2


def test_lower_bound_from_config(tmp_path, capsys):
    cfg = write(tmp_path / "lb.json", {"experiment": "lower_bound", "lower_bound": {"gamma": 0.0, "d": 3, "n": 2, "eta": 0.5}})
    assert main(["lower-bound", "--config", cfg]) == 0
    assert capsys.readouterr().out.splitlines()[1].endswith(",0.0625")


def test_sweep_writes_csv_and_json(tmp_path):
    cfg = write(tmp_path / "q.json", {
        "experiment": "qst_sweep", "circuit": {"kind": "tfim", "rows": 1, "cols": 3, "layers": 2},
        "learner": {"l_prime": [1, 2], "n_data": 300}})
    out = tmp_path / "out.csv"
    assert main(["qst", "--config", cfg, "--out", str(out), "--seed", "4"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("experiment,n,rows")
    assert all(line.endswith(",") for line in lines[1:])
    js = tmp_path / "out.json"
    assert main(["qst", "--config", cfg, "--out", str(js), "--format", "json", "--record-timing"]) == 0
    assert len(json.loads(js.read_text())["rows"]) == len(lines) - 1


def test_check_failure_exit_code(tmp_path):
    # a single noiseless trial at tiny sample size cannot show the required relative drop
    cfg = write(tmp_path / "q.json", {
        "experiment": "qst_sweep", "circuit": {"kind": "tfim", "rows": 1, "cols": 3, "layers": 1},
        "noise": {"type": "depolarizing", "gamma": 0.0}, "learner": {"l_prime": [1, 2, 3], "n_data": 20}})
    assert main(["qst", "--config", cfg, "--out", str(tmp_path / "o.csv"), "--check"]) == 3


def test_checks_command_passes(tmp_path):
    cfg = write(tmp_path / "m.json", {"experiment": "moment_checks", "seed": 3, "moment_draws": 20000,
                                      "orthogonality_circuits": 300})
    assert main(["checks", "--config", cfg, "--out", str(tmp_path / "m.csv")]) == 0


def test_learn_then_predict(tmp_path, capsys):
    cfg = write(tmp_path / "l.json", {
        "experiment": "learn", "learn_kind": "process", "seed": 2,
        "circuit": {"kind": "tfim", "rows": 1, "cols": 3, "layers": 2},
        "learner": {"l_prime": [2], "n_data": 2000}})
    model_path = tmp_path / "model.json"
    assert main(["learn", "--config", cfg, "--out", str(model_path)]) == 0
    model = learners.LearnedModel.loads(model_path.read_text())
    assert model.kind == "process" and model.n == 3 and model.meta["seed"] == 2
    inputs = write(tmp_path / "in.json", [{"stabilizer": ["Z+", "X-", "Y+"]}, {"bloch": [[0, 0, 1]] * 3}])
    assert main(["predict", "--model", str(model_path), "--inputs", inputs, "--format", "json"]) == 0
    preds = json.loads(capsys.readouterr().out)["predictions"]
    assert len(preds) == 2
    bad = write(tmp_path / "bad.json", [{"stabilizer": ["Z+"]}])
    assert main(["predict", "--model", str(model_path), "--inputs", bad]) == 2


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "noisy_tomography.experiments", "lower-bound", "--gamma", "0",
                          "--depth", "1", "--n", "1", "--eta", "0.5"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.splitlines()[1].endswith(",0.125")
