import json

import pytest
import torch

from fakes import random_rotations
from fvin.common.config import ForceConvention
from fvin.common.errors import DimMismatch, SchemaError
from fvin.dynmodel import (
    DynamicsModel,
    MLPSpec,
    NetworkModel,
    checkpoint_to_dict,
    flatten_configuration,
    inertia_from_cholesky,
    load_checkpoint,
    mlp_forward,
    potential_at,
    save_checkpoint,
    unflatten_configuration,
)
from fvin.envs.pendulum import pendulum_embed
from fvin.envs.truth import TruthPendulumModel, TruthQuadrotorModel
from fvin.integrator import IntegratorParams, orthogonality_trace, rollout

PENDULUM = ForceConvention.PENDULUM_SO3
QUADROTOR = ForceConvention.QUADROTOR_SE3


def test_mlp_spec_counts_and_unpacks_parameters():
    spec = MLPSpec((9, 10, 10, 1))
    params = spec.initial_params(torch.Generator().manual_seed(0))

    layers = spec.unpack(params)

    assert spec.n_params == 9 * 10 + 10 + 10 * 10 + 10 + 10 + 1
    assert [W.shape for W, _ in layers] == [(10, 9), (10, 10), (1, 10)]
    assert all(float(b.abs().max()) == 0.0 for _, b in layers)
    assert float(layers[0][0].abs().max()) <= 1.0 / 3.0


def test_mlp_rejects_mismatched_shapes():
    spec = MLPSpec((3, 4, 2))
    params = torch.zeros(spec.n_params, dtype=torch.float64)

    assert mlp_forward(spec, params, torch.ones(5, 7, 3, dtype=torch.float64)).shape == (5, 7, 2)

    with pytest.raises(DimMismatch):
        mlp_forward(spec, params, torch.ones(5, 4, dtype=torch.float64))
    with pytest.raises(DimMismatch):
        spec.unpack(torch.zeros(spec.n_params + 1, dtype=torch.float64))
    with pytest.raises(DimMismatch):
        MLPSpec((3,))


def test_cholesky_inertia_is_symmetric_positive_definite(generator):
    l6 = 3.0 * torch.randn(1000, 6, generator=generator, dtype=torch.float64)
    l6[0] = 0.0

    J = inertia_from_cholesky(l6, 0.01)

    assert torch.equal(J, J.transpose(-1, -2))
    assert float(torch.linalg.eigvalsh(J).min()) >= 0.01 - 1e-12


def test_configuration_flattening_round_trips(generator):
    R = random_rotations(generator, 4)
    x = torch.randn(4, 3, generator=generator, dtype=torch.float64)

    q = flatten_configuration(QUADROTOR, x, R)
    x2, R2 = unflatten_configuration(QUADROTOR, q)

    assert q.shape == (4, 12)
    assert torch.equal(x2, x) and torch.equal(R2, R)
    assert flatten_configuration(PENDULUM, x, R).shape == (4, 9)
    with pytest.raises(DimMismatch):
        unflatten_configuration(PENDULUM, q)


def test_network_layout_matches_components():
    model = NetworkModel.initialize(PENDULUM, hidden=(8, 8), seed=3)

    sizes = model.component_sizes()

    assert list(sizes) == ["inertia", "potential", "gains"]
    assert sum(sizes.values()) == model.params.numel()
    assert torch.equal(torch.cat([model.component(name) for name in sizes]), model.params)
    assert isinstance(model, DynamicsModel)

    quad = NetworkModel.initialize(QUADROTOR, hidden=(8,), forced=False, epsilon=1e-7, inertia_init=1e-5)
    assert list(quad.component_sizes()) == ["mass", "inertia", "potential"]
    assert not quad.forced


def test_same_seed_gives_same_model():
    a = NetworkModel.initialize(PENDULUM, seed=11)
    b = NetworkModel.initialize(PENDULUM, seed=11)
    c = NetworkModel.initialize(PENDULUM, seed=12)

    assert torch.equal(a.params, b.params)
    assert not torch.equal(a.params, c.params)


def test_quadrotor_model_starts_from_unit_mass_and_given_inertia(generator):
    model = NetworkModel.initialize(QUADROTOR, hidden=(6,), epsilon=1e-7, inertia_init=1e-5)
    x = torch.randn(5, 3, generator=generator, dtype=torch.float64)
    R = random_rotations(generator, 5)

    assert torch.allclose(model.mass(x, R), torch.ones(5, dtype=torch.float64))
    expected = (1e-5 + 1e-7) * torch.eye(3, dtype=torch.float64).expand(5, 3, 3)
    assert torch.allclose(model.inertia(x, R), expected, atol=1e-18)
    assert model.gains(x, R).shape == (5, 6, 4)


def _central_difference_gradient(model, q, step=1e-6):
    n = q.shape[-1]
    shifts = step * torch.eye(n, dtype=torch.float64)
    U_plus = potential_at(model, q + shifts).U
    U_minus = potential_at(model, q - shifts).U
    return (U_plus - U_minus) / (2.0 * step)


@pytest.mark.parametrize("convention", [PENDULUM, QUADROTOR])
def test_potential_gradient_matches_finite_differences(convention, generator):
    for draw in range(100):
        model = NetworkModel.initialize(convention, hidden=(8, 8), seed=draw)
        x = torch.randn(3, generator=generator, dtype=torch.float64)
        R = random_rotations(generator, 1)[0]
        q = flatten_configuration(convention, x, R)

        pot = model.potential(*unflatten_configuration(convention, q))
        numeric = _central_difference_gradient(model, q)

        if convention.translational:
            assert torch.allclose(pot.dU_dx, numeric[:3], atol=1e-8), draw
            assert torch.allclose(pot.dU_dR.flatten(), numeric[3:], atol=1e-8), draw
        else:
            assert torch.allclose(pot.dU_dR.flatten(), numeric, atol=1e-8), draw


def test_potential_is_detached_without_grad_mode(generator):
    model = NetworkModel.initialize(PENDULUM, seed=0)
    R = random_rotations(generator, 2)
    x = torch.zeros(2, 3, dtype=torch.float64)
    tracked = model.with_params(model.params.clone().requires_grad_(True))

    with torch.no_grad():
        pot = tracked.potential(x, R)
    assert not pot.U.requires_grad and not pot.dU_dR.requires_grad

    pot = tracked.potential(x, R)
    assert pot.dU_dR.requires_grad


def test_forces_follow_the_system_convention(generator):
    R = random_rotations(generator, 2)
    x = torch.zeros(2, 3, dtype=torch.float64)

    pend = NetworkModel.initialize(PENDULUM, seed=1)
    u = torch.tensor([[0.5], [-2.0]], dtype=torch.float64)
    forces = pend.forces(x, R, u)
    assert torch.allclose(forces.fR_minus, pend.gains(x, R) * u)
    assert float(forces.fR_plus.abs().max()) == 0.0
    assert float(forces.fx_minus.abs().max()) == 0.0

    quad = NetworkModel.initialize(QUADROTOR, seed=1)
    u4 = torch.randn(2, 4, generator=generator, dtype=torch.float64)
    f = quad.forces(x, R, u4)
    g = quad.gains(x, R)
    assert torch.allclose(f.fx_minus, 0.5 * (g[..., :3, :] @ u4[..., None]).squeeze(-1))
    assert torch.equal(f.fR_minus, f.fR_plus)

    with pytest.raises(DimMismatch):
        quad.forces(x, R, u)

    unforced = NetworkModel.initialize(PENDULUM, forced=False)
    assert float(unforced.forces(x, R, u).fR_minus.abs().max()) == 0.0


def test_network_model_drives_the_integrator():
    model = NetworkModel.initialize(PENDULUM, hidden=(8, 8), seed=2)
    controls = torch.full((30, 1), 0.05, dtype=torch.float64)

    states = rollout(pendulum_embed(0.3, 0.5), controls, model, IntegratorParams(h=0.02))

    assert len(states) == 31
    assert float(orthogonality_trace(states).max()) < 1e-12


def test_truth_models_satisfy_the_model_protocol():
    assert isinstance(TruthPendulumModel(h=0.01), DynamicsModel)
    assert isinstance(TruthQuadrotorModel(h=0.01), DynamicsModel)


def test_checkpoint_round_trip_preserves_model(tmp_path, generator):
    model = NetworkModel.initialize(QUADROTOR, hidden=(6, 6), seed=9, epsilon=1e-7)
    path = save_checkpoint(model, tmp_path / "ckpt" / "model.json")

    loaded = load_checkpoint(path)

    assert loaded.convention is QUADROTOR
    assert torch.equal(loaded.params, model.params)
    assert loaded.epsilon == 1e-7 and loaded.seed == 9
    x = torch.randn(3, generator=generator, dtype=torch.float64)
    R = random_rotations(generator, 1)[0]
    assert torch.equal(loaded.potential(x, R).U, model.potential(x, R).U)


def test_checkpoint_errors_are_schema_errors(tmp_path):
    with pytest.raises(SchemaError):
        load_checkpoint(tmp_path / "missing.json")

    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(SchemaError):
        load_checkpoint(broken)

    data = checkpoint_to_dict(NetworkModel.initialize(PENDULUM, hidden=(4,)))

    future = tmp_path / "future.json"
    future.write_text(json.dumps({**data, "schema_version": 2}), encoding="utf-8")
    with pytest.raises(SchemaError):
        load_checkpoint(future)

    truncated = tmp_path / "truncated.json"
    truncated.write_text(json.dumps({**data, "params": {**data["params"], "potential": [0.0]}}), encoding="utf-8")
    with pytest.raises(SchemaError):
        load_checkpoint(truncated)
