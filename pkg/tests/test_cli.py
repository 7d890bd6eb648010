import json
import os
import subprocess
import sys

import pytest

SMALL_PENDULUM = {
    "system": "pendulum-so3",
    "seed": 3,
    "model": {"hidden": [4, 4]},
    "data": {"trajectories": 6, "steps": 3},
    "train": {"iterations": 4, "log_every": 2},
    "mpc": {"horizon": 3, "steps": 4, "apply_count": 1, "solver": {"iterations": 2}},
    "eval": {"rollout_steps": 20, "grid_points": 5},
}


def _run(args, home):
    env = os.environ.copy()
    env["LIEFVIN_DIR"] = str(home)
    cmd = [sys.executable, "-m", "fvin.cli", *map(str, args)]
    return subprocess.run(cmd, env=env, capture_output=True, text=True, check=False)


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.json"
    path.write_text(json.dumps(SMALL_PENDULUM), encoding="utf-8")
    return path


def test_cli_pipeline_writes_every_artifact(tmp_path, small_config):
    home = tmp_path / "home"
    data = tmp_path / "data" / "pendulum.jsonl"
    ckpt = tmp_path / "out" / "model.json"
    loss = tmp_path / "out" / "loss.csv"

    result = _run(["gen-data", "--config", small_config, "--out", data], home)
    assert result.returncode == 0, result.stderr
    assert data.is_file()
    assert len(data.read_text(encoding="utf-8").splitlines()) == 18
    assert "transitions: 18 (pv)" in result.stdout

    result = _run(["train", "--config", small_config, "--data", data, "--out-checkpoint", ckpt, "--loss-csv", loss], home)
    assert result.returncode == 0, result.stderr
    assert ckpt.is_file()
    assert loss.read_text(encoding="utf-8").splitlines()[0] == "iteration[-],loss[-]"
    assert json.loads(ckpt.with_name(ckpt.name + ".config.json").read_text(encoding="utf-8"))["seed"] == 3

    for mode in ("energy", "constraint", "phase", "learned-quantities"):
        out = tmp_path / "eval" / f"{mode}.csv"
        result = _run(["eval", "--checkpoint", ckpt, "--mode", mode, "--out-csv", out, "--config", small_config], home)
        assert result.returncode == 0, result.stderr
        assert out.is_file()

    assert (home / "logs" / "liefvin.log").is_file()


def test_cli_default_outputs_go_to_the_runs_dir(tmp_path, small_config):
    home = tmp_path / "home"

    result = _run(["gen-data", "--config", small_config, "--kind", "p", "--seed", "9"], home)

    assert result.returncode == 0, result.stderr
    assert (home / "runs" / "pendulum-so3-p-seed9.jsonl").is_file()


def test_cli_gen_data_is_byte_identical_for_a_seed(tmp_path, small_config):
    home = tmp_path / "home"
    first = tmp_path / "a" / "pendulum.jsonl"
    second = tmp_path / "b" / "pendulum.jsonl"

    for out in (first, second):
        result = _run(["gen-data", "--config", small_config, "--seed", "7", "--out", out], home)
        assert result.returncode == 0, result.stderr

    assert first.read_bytes() == second.read_bytes()
    manifest = first.name + ".manifest.json"
    assert first.with_name(manifest).read_bytes() == second.with_name(manifest).read_bytes()


def test_cli_mpc_with_truth_parameters(tmp_path, small_config):
    log = tmp_path / "mpc.csv"

    result = _run(["mpc", "--checkpoint", "truth", "--config", small_config, "--log-csv", log], tmp_path / "home")

    assert result.returncode == 0, result.stderr
    assert len(log.read_text(encoding="utf-8").splitlines()) == 5
    assert "final attitude error" in result.stdout


def test_cli_eval_truth_quadrotor(tmp_path):
    out = tmp_path / "quad.csv"

    result = _run(
        ["eval", "--checkpoint", "truth", "--config", "quadrotor-se3", "--mode", "constraint", "--steps", "10", "--out-csv", out],
        tmp_path / "home",
    )

    assert result.returncode == 0, result.stderr
    assert len(out.read_text(encoding="utf-8").splitlines()) == 12


def test_cli_gradcheck_passes(tmp_path):
    result = _run(["gradcheck", "--algorithm", "Ib"], tmp_path / "home")

    assert result.returncode == 0, result.stdout + result.stderr
    assert "pass" in result.stdout


def test_cli_gradcheck_on_the_quadrotor(tmp_path):
    result = _run(["gradcheck", "--algorithm", "IIa", "--system", "quadrotor-se3"], tmp_path / "home")

    assert result.returncode == 0, result.stdout + result.stderr
    assert "algorithm: IIa (quadrotor-se3)" in result.stdout
    assert "pass" in result.stdout


def test_cli_reports_validation_errors(tmp_path, small_config):
    home = tmp_path / "home"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"system": "pendulum-so3", "train": {"lr": -1.0}}), encoding="utf-8")

    result = _run(["gen-data", "--config", bad], home)
    assert result.returncode == 1
    assert "error:" in result.stderr

    result = _run(["train", "--config", small_config, "--data", tmp_path / "missing.jsonl"], home)
    assert result.returncode == 1

    result = _run(["eval", "--checkpoint", tmp_path / "missing.json", "--mode", "energy"], home)
    assert result.returncode == 1

    result = _run(["mpc", "--checkpoint", "truth", "--config", small_config, "--task", "hover"], home)
    assert result.returncode == 1

    result = _run(["gradcheck", "--algorithm", "Ia", "--draws", "0"], home)
    assert result.returncode == 1
