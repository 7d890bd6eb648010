import dataclasses
import json

import pytest
import torch

from fakes import FakeRigidBody, moving_state
from fvin.common.config import ForceConvention
from fvin.common.errors import ConfigError, DimMismatch, NonFiniteLoss, NotARotation, SchemaError
from fvin.dynmodel import NetworkModel
from fvin.envs.datagen import DataGenSpec
from fvin.envs.pendulum import generate_pendulum_dataset
from fvin.envs.quadrotor import generate_quadrotor_dataset
from fvin.envs.truth import TruthPendulumModel
from fvin.integrator import IntegratorParams, NewtonConfig, rollout
from fvin.liegroup import exp_so3
from fvin.trainer import (
    DatasetManifest,
    TrainConfig,
    TransitionP,
    TransitionPV,
    attitude_error,
    loss_for,
    loss_Ia,
    loss_Ib,
    loss_IIa,
    loss_IIb,
    read_dataset,
    train,
    train_blackbox_baseline,
    write_dataset,
    write_loss_history,
)
from fvin.trainer.dataset import manifest_path

P = IntegratorParams(h=0.02, alpha=0.3)
UNROLL = NewtonConfig(mode="unroll")


def _trajectories(body, generator, count=3, steps=5):
    out = []
    for _ in range(count):
        controls = 0.5 * torch.randn(steps, 4, generator=generator, dtype=torch.float64)
        out.append((rollout(moving_state(generator), controls, body, P), controls))
    return out


def _pv_dataset(trajectories):
    rows = {f.name: [] for f in dataclasses.fields(TransitionPV)}
    for states, controls in trajectories:
        for s0, s1, u in zip(states[:-1], states[1:], controls):
            for name, value in (("x", s0.x), ("R", s0.R), ("v", s0.v), ("omega", s0.omega)):
                rows[name + "0"].append(value)
            for name, value in (("x", s1.x), ("R", s1.R), ("v", s1.v), ("omega", s1.omega)):
                rows[name + "1"].append(value)
            rows["u0"].append(u)
    return TransitionPV(**{name: torch.stack(values) for name, values in rows.items()})


def _p_dataset(trajectories):
    rows = {f.name: [] for f in dataclasses.fields(TransitionP)}
    for states, controls in trajectories:
        for k in range(len(states) - 2):
            for i in range(3):
                rows[f"x{i}"].append(states[k + i].x)
                rows[f"R{i}"].append(states[k + i].R)
            rows["u0"].append(controls[k])
            rows["u1"].append(controls[k + 1])
    return TransitionP(**{name: torch.stack(values) for name, values in rows.items()})


@pytest.fixture
def body_trajectories(generator):
    return _trajectories(FakeRigidBody(inertia_growth=0.1), generator)


@pytest.fixture
def small_pendulum_data():
    return generate_pendulum_dataset(DataGenSpec(trajectories=4, steps=5, seed=7))


def test_losses_vanish_on_the_generating_model(body_trajectories):
    body = FakeRigidBody(inertia_growth=0.1)
    pv = _pv_dataset(body_trajectories)
    p = _p_dataset(body_trajectories)

    assert len(pv) == 15 and len(p) == 12
    assert float(loss_Ia(pv, body, P, UNROLL)) <= 1e-16
    assert float(loss_Ib(pv, body, P)) <= 1e-16
    assert float(loss_IIa(p, body, P, UNROLL)) <= 1e-16
    assert float(loss_IIb(p, body, P)) <= 1e-16


def test_losses_detect_a_wrong_model(body_trajectories):
    wrong = FakeRigidBody(inertia_growth=0.1, k=3.0, tilt=0.5)
    pv = _pv_dataset(body_trajectories)
    p = _p_dataset(body_trajectories)

    for value in (
        loss_Ia(pv, wrong, P, UNROLL),
        loss_Ib(pv, wrong, P),
        loss_IIa(p, wrong, P, UNROLL),
        loss_IIb(p, wrong, P),
    ):
        assert float(value) > 1e-12


def _all_losses(pv, p, model):
    return {
        "Ia": float(loss_Ia(pv, model, P, UNROLL)),
        "Ib": float(loss_Ib(pv, model, P)),
        "IIa": float(loss_IIa(p, model, P, UNROLL)),
        "IIb": float(loss_IIb(p, model, P)),
    }


def _shift_potential_offset(model, c):
    sizes = model.component_sizes()
    end = 0
    for name, size in sizes.items():
        end += size
        if name == "potential":
            break
    params = model.params.clone()
    params[end - 1] += c
    return model.with_params(params)


def _small_datasets(convention):
    if convention is ForceConvention.PENDULUM_SO3:
        make = generate_pendulum_dataset
    else:
        make = generate_quadrotor_dataset
    pv = make(DataGenSpec(trajectories=3, steps=4, seed=2))
    p = make(DataGenSpec(trajectories=3, steps=4, seed=2, kind="p"))
    return pv, p


@pytest.mark.parametrize("convention", [ForceConvention.PENDULUM_SO3, ForceConvention.QUADROTOR_SE3])
def test_potential_offset_changes_no_loss(convention):
    pv, p = _small_datasets(convention)
    model = NetworkModel.initialize(convention, hidden=(8, 8), seed=4)

    before = _all_losses(pv, p, model)
    shifted = _shift_potential_offset(model, 3.7)
    after = _all_losses(pv, p, shifted)

    offset = shifted.potential(pv.x0, pv.R0).U - model.potential(pv.x0, pv.R0).U
    assert torch.allclose(offset, torch.full_like(offset, 3.7))
    for name, value in before.items():
        assert after[name] == pytest.approx(value, rel=1e-12, abs=0.0), name


def test_losses_add_over_disjoint_batches(body_trajectories):
    body = NetworkModel.initialize(ForceConvention.QUADROTOR_SE3, hidden=(6,), seed=8)
    pv = _pv_dataset(body_trajectories)
    p = _p_dataset(body_trajectories)
    pv_a, pv_b = pv.select(slice(0, 6)), pv.select(slice(6, len(pv)))
    p_a, p_b = p.select(slice(0, 5)), p.select(slice(5, len(p)))

    whole = _all_losses(pv, p, body)
    first = _all_losses(pv_a, p_a, body)
    rest = _all_losses(pv_b, p_b, body)

    for name in whole:
        assert whole[name] == pytest.approx(first[name] + rest[name], rel=1e-12), name


def test_duplicated_sample_doubles_the_loss(body_trajectories):
    body = NetworkModel.initialize(ForceConvention.QUADROTOR_SE3, hidden=(6,), seed=8)
    one_pv = _pv_dataset(body_trajectories).select(slice(2, 3))
    one_p = _p_dataset(body_trajectories).select(slice(2, 3))

    single = _all_losses(one_pv, one_p, body)
    double = _all_losses(TransitionPV.concat([one_pv, one_pv]), TransitionP.concat([one_p, one_p]), body)

    assert single["Ia"] > 0.0
    for name in single:
        assert double[name] == pytest.approx(2.0 * single[name], rel=1e-12), name


def test_attitude_error_is_squared_angle_and_ignores_far_rotations():
    axis = torch.tensor([0.0, 0.6, 0.8], dtype=torch.float64)
    R_obs = exp_so3(torch.tensor([0.3, -0.1, 0.2], dtype=torch.float64))
    near = exp_so3(0.25 * axis) @ R_obs
    far = exp_so3(3.12 * axis) @ R_obs

    err = attitude_error(torch.stack((near, far)), torch.stack((R_obs, R_obs)))

    assert float(err[0]) == pytest.approx(0.0625, rel=1e-10)
    assert float(err[1]) == 0.0


def test_loss_for_checks_the_data_kind(small_pendulum_data):
    assert loss_for("Ia", small_pendulum_data) is loss_Ia
    assert loss_for("Ib", small_pendulum_data) is loss_Ib

    with pytest.raises(SchemaError):
        loss_for("IIa", small_pendulum_data)
    with pytest.raises(SchemaError):
        loss_for("III", small_pendulum_data)


def test_transitions_validate_their_rows(small_pendulum_data):
    data = small_pendulum_data

    assert len(data) == 20
    assert len(data.select(slice(0, 5))) == 5
    assert len(TransitionPV.concat([data, data.select(torch.tensor([1, 3]))])) == 22

    with pytest.raises(DimMismatch):
        dataclasses.replace(data, u0=data.u0[:-1])
    with pytest.raises(NotARotation):
        dataclasses.replace(data, R1=2.0 * data.R1)
    with pytest.raises(DimMismatch):
        dataclasses.replace(data, omega0=data.omega0[:, :2])


def test_train_config_is_validated():
    with pytest.raises(ConfigError):
        TrainConfig(algorithm="III")
    with pytest.raises(ConfigError):
        TrainConfig(iterations=-1)
    with pytest.raises(ConfigError):
        TrainConfig(lr=0.0)
    with pytest.raises(ConfigError):
        TrainConfig(alpha=2.0)
    assert TrainConfig(algorithm="IIb").position_only


def test_dataset_round_trip(tmp_path, small_pendulum_data):
    manifest = DatasetManifest(
        convention=ForceConvention.PENDULUM_SO3,
        kind="pv",
        count=len(small_pendulum_data),
        h=0.02,
        seed=7,
        trajectories=4,
        steps_per_trajectory=5,
    )
    path = write_dataset(tmp_path / "data" / "pendulum.jsonl", small_pendulum_data, manifest)

    loaded, loaded_manifest = read_dataset(path)

    assert loaded_manifest == manifest
    for f in dataclasses.fields(TransitionPV):
        assert torch.equal(getattr(loaded, f.name), getattr(small_pendulum_data, f.name))


def test_dataset_schema_errors(tmp_path, small_pendulum_data):
    manifest = DatasetManifest(ForceConvention.PENDULUM_SO3, "pv", len(small_pendulum_data), 0.02, 7)
    path = write_dataset(tmp_path / "pendulum.jsonl", small_pendulum_data, manifest)
    mpath = manifest_path(path)

    with pytest.raises(SchemaError):
        read_dataset(tmp_path / "missing.jsonl")

    good = json.loads(mpath.read_text(encoding="utf-8"))
    for bad in ({**good, "count": 3}, {**good, "schema_version": 9}, {**good, "kind": "pva"}, {**good, "convention": "car"}):
        mpath.write_text(json.dumps(bad), encoding="utf-8")
        with pytest.raises(SchemaError):
            read_dataset(path)

    mpath.write_text(json.dumps({**good, "convention": "quadrotor-se3"}), encoding="utf-8")
    with pytest.raises(SchemaError):
        read_dataset(path)

    mpath.write_text(json.dumps(good), encoding="utf-8")
    path.write_text(path.read_text(encoding="utf-8") + "{broken\n", encoding="utf-8")
    with pytest.raises(SchemaError):
        read_dataset(path)


def test_zero_iterations_keeps_initial_parameters(small_pendulum_data):
    model = NetworkModel.initialize(ForceConvention.PENDULUM_SO3, hidden=(8, 8), seed=1)

    result = train(small_pendulum_data, model, TrainConfig(iterations=0))

    assert torch.equal(result.model.params, model.params)
    assert len(result.history) == 1
    assert result.history[0][0] == 0
    assert result.final_loss > 0.0


def test_training_reduces_the_loss(small_pendulum_data):
    model = NetworkModel.initialize(ForceConvention.PENDULUM_SO3, hidden=(8, 8), seed=1)
    cfg = TrainConfig(algorithm="Ia", iterations=40, lr=1e-2, log_every=10)

    result = train(small_pendulum_data, model, cfg)

    assert [it for it, _ in result.history] == [0, 10, 20, 30, 40]
    assert result.final_loss < result.history[0][1]
    assert not torch.equal(result.model.params, model.params)


def test_training_is_bit_reproducible(small_pendulum_data):
    cfg = TrainConfig(algorithm="Ia", iterations=100, lr=1e-2, lr_half_life=50, seed=5, log_every=1)

    runs = [
        train(small_pendulum_data, NetworkModel.initialize(ForceConvention.PENDULUM_SO3, hidden=(8, 8), seed=5), cfg)
        for _ in range(2)
    ]

    assert torch.equal(runs[0].model.params, runs[1].model.params)
    assert runs[0].history == runs[1].history
    assert len(runs[0].history) == 101


def test_training_position_only_algorithms(small_pendulum_data):
    data = generate_pendulum_dataset(DataGenSpec(trajectories=4, steps=5, seed=7, kind="p"))
    model = NetworkModel.initialize(ForceConvention.PENDULUM_SO3, hidden=(8, 8), seed=1)

    for algorithm in ("IIa", "IIb"):
        result = train(data, model, TrainConfig(algorithm=algorithm, iterations=20, lr=5e-3))
        assert result.final_loss < result.history[0][1]

    with pytest.raises(SchemaError):
        train(small_pendulum_data, model, TrainConfig(algorithm="IIa", iterations=1))


def test_training_rejects_mismatched_controls(small_pendulum_data):
    model = NetworkModel.initialize(ForceConvention.QUADROTOR_SE3, hidden=(8,))

    with pytest.raises(SchemaError):
        train(small_pendulum_data, model, TrainConfig(iterations=1))


def test_training_stops_on_non_finite_loss(small_pendulum_data):
    model = NetworkModel.initialize(ForceConvention.PENDULUM_SO3, hidden=(8,))
    broken = model.with_params(torch.full_like(model.params, float("nan")))

    with pytest.raises(NonFiniteLoss) as excinfo:
        train(small_pendulum_data, broken, TrainConfig(iterations=5))

    assert excinfo.value.iteration == 0
    assert excinfo.value.last_finite is None


def test_loss_history_csv(tmp_path):
    out = write_loss_history(tmp_path / "runs" / "loss.csv", [(0, 2.5), (10, 1.25)])

    lines = out.read_text(encoding="utf-8").splitlines()

    assert lines == ["iteration[-],loss[-]", "0,2.5", "10,1.25"]


def test_blackbox_baseline_drifts_off_the_rotation_group(small_pendulum_data):
    model, diag = train_blackbox_baseline(
        small_pendulum_data,
        ForceConvention.PENDULUM_SO3,
        hidden=(16,),
        iterations=30,
        lr=1e-2,
        rollout_steps=200,
        energy_model=TruthPendulumModel(h=0.02),
    )

    assert model.state_dim == 12
    assert diag.history[0][1] > diag.final_loss
    assert diag.max_orthogonality_error > 1e-6
    assert diag.energy is not None and diag.energy.shape == (201,)
