import json
import math

import pytest
import torch

from fvin.common.config import ForceConvention
from fvin.common.errors import ConfigError
from fvin.envs import PendulumEnv, QuadrotorEnv
from fvin.experiment import PRESETS, ExperimentConfig
from fvin.integrator import SE3State
from fvin.mpcctl import PendulumSwingup, PiecewiseLinearReference, QuadrotorTrack


def test_presets_load_by_name():
    pendulum = ExperimentConfig.load("pendulum-so3")
    quad = ExperimentConfig.load("quadrotor-se3")

    assert pendulum.system is ForceConvention.PENDULUM_SO3
    assert pendulum.integrator.h == 0.02 and pendulum.integrator.alpha == 0.5
    assert pendulum.data.trajectories == 512 and pendulum.data.steps == 10
    assert pendulum.train.algorithm == "Ia"
    assert pendulum.train.newton.mode == "unroll"
    assert pendulum.mpc.task == "swingup"

    assert quad.system is ForceConvention.QUADROTOR_SE3
    assert quad.model.epsilon == 1e-7
    assert quad.train.lr_half_life == 5000
    assert quad.mpc.u_high[0] == pytest.approx(0.595)
    assert quad.controller.kp_att == 2e-3


def test_unknown_preset_and_missing_file_are_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.preset("cartpole")
    with pytest.raises(ConfigError):
        ExperimentConfig.load(tmp_path / "missing.json")


def test_config_file_overlays_preset(tmp_path):
    path = tmp_path / "exp.json"
    path.write_text(
        json.dumps({"system": "pendulum-so3", "seed": 7, "train": {"iterations": 5}, "model": {"hidden": [4]}}),
        encoding="utf-8",
    )

    cfg = ExperimentConfig.load(path)

    assert cfg.seed == 7
    assert cfg.data.seed == 7 and cfg.train.seed == 7
    assert cfg.train.iterations == 5
    assert cfg.train.lr == 1e-3
    assert cfg.model.hidden == (4,)


def test_invalid_json_is_reported(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        ExperimentConfig.load(path)

    path.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigError):
        ExperimentConfig.load(path)


@pytest.mark.parametrize(
    "override",
    [
        {"colour": "red"},
        {"train": {"momentum": 0.9}},
        {"mpc": {"solver": {"beta": 0.9}}},
        {"train": {"algorithm": "III"}},
        {"mpc": {"task": "hover"}},
        {"mpc": {"u_low": [-1.0, -1.0], "u_high": [1.0, 1.0]}},
        {"mpc": {"start": [0.0]}},
        {"mpc": {"apply_count": 100}},
        {"eval": {"start": [1.0, 2.0, 3.0]}},
        {"integrator": {"h": -0.1}},
        {"integrator": {"alpha": "half"}},
        {"model": {"forced": "maybe"}},
        {"model": {"hidden": []}},
        {"data": {"kind": "pvq"}},
        {"seed": 1.5},
        {"train": {"lr": float("nan")}},
    ],
)
def test_invalid_overrides_are_rejected(override):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({"system": "pendulum-so3", **override})


def test_system_is_required():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({"seed": 1})


def test_string_values_are_coerced():
    cfg = ExperimentConfig.from_mapping(
        {"system": "pendulum-so3", "seed": "3", "model": {"forced": "no"}, "integrator": {"h": "0.01"}}
    )

    assert cfg.seed == 3
    assert cfg.model.forced is False
    assert cfg.integrator.h == 0.01
    assert cfg.data.h == 0.01 and cfg.train.h == 0.01


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_mapping_round_trip(name):
    cfg = ExperimentConfig.preset(name)

    again = ExperimentConfig.from_mapping(json.loads(json.dumps(cfg.to_mapping())))

    assert again == cfg


def test_overrides_touch_only_their_fields():
    cfg = ExperimentConfig.preset("quadrotor-se3")

    out = cfg.with_overrides(seed=11, kind="p", iterations=3, mpc_steps=7, task="diamond")

    assert out.seed == 11 and out.data.seed == 11 and out.train.seed == 11
    assert out.data.kind == "p"
    assert out.train.iterations == 3
    assert out.mpc.steps == 7 and out.mpc.task == "diamond"
    assert out.train.lr == cfg.train.lr
    assert cfg.with_overrides() == cfg

    with pytest.raises(ConfigError):
        cfg.with_overrides(task="swingup")


def test_builders_follow_the_system():
    pendulum = ExperimentConfig.preset("pendulum-so3")
    quad = ExperimentConfig.preset("quadrotor-se3")

    model = pendulum.initial_model()
    assert model.convention is ForceConvention.PENDULUM_SO3
    assert list(model.component_sizes())[0] == "inertia"

    assert isinstance(pendulum.make_env(), PendulumEnv)
    env = quad.make_env()
    assert isinstance(env, QuadrotorEnv)
    assert isinstance(env.state, SE3State)

    assert isinstance(pendulum.mpc_problem().cost, PendulumSwingup)
    diamond = quad.mpc_problem("diamond").cost
    assert isinstance(diamond, QuadrotorTrack)
    assert isinstance(diamond.reference, PiecewiseLinearReference)
    with pytest.raises(ConfigError):
        pendulum.mpc_problem("hover")


def test_eval_start_states():
    pendulum = ExperimentConfig.preset("pendulum-so3").eval_start()
    quad = ExperimentConfig.preset("quadrotor-se3").eval_start()

    assert float(pendulum.R[1, 1]) == pytest.approx(math.cos(math.pi / 2), abs=1e-15)
    assert torch.equal(quad.omega, torch.tensor([0.3, -0.2, 0.1], dtype=torch.float64))
    assert float(quad.x.abs().max()) == 0.0


def test_mpc_weights_reach_the_cost():
    cfg = ExperimentConfig.from_mapping({"system": "pendulum-so3", "mpc": {"weights": {"w_omega": 0.5}}})

    assert cfg.mpc_problem().cost.w_omega == 0.5

    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({"system": "pendulum-so3", "mpc": {"weights": {"w_jerk": 1.0}}}).mpc_problem()
