import math

import pytest
import torch

from fakes import FakeRigidBody, moving_state, random_rotations
from fvin.common.errors import ConfigError, NewtonDiverged, RolloutError
from fvin.envs.pendulum import pendulum_embed, pendulum_extract, pendulum_step
from fvin.envs.truth import TruthPendulumModel
from fvin.integrator import (
    DiscreteForces,
    IntegratorParams,
    NewtonConfig,
    SE3State,
    SO3State,
    drift_slope,
    energy_trace,
    euler_lagrange_residual,
    legendre_momenta,
    matrix_residual,
    orthogonality_trace,
    rollout,
    solve_attitude,
    step_position_only,
    step_se3,
    step_so3,
)


def _random_inertia(generator, n, low=0.8, high=2.0):
    Q = random_rotations(generator, n)
    eigs = low + (high - low) * torch.rand(n, 3, generator=generator, dtype=torch.float64)
    return Q @ torch.diag_embed(eigs) @ Q.transpose(-1, -2)


def _random_controls(generator, steps, scale=0.5):
    return scale * torch.randn(steps, 4, generator=generator, dtype=torch.float64)


def test_newton_solves_attitude_equation_across_inputs(generator):
    J = _random_inertia(generator, 256)
    a = torch.randn(256, 3, generator=generator, dtype=torch.float64)
    a = 0.2 * torch.rand(256, 1, generator=generator, dtype=torch.float64) * a / torch.linalg.vector_norm(a, dim=-1, keepdim=True)

    sol = solve_attitude(a, J)

    assert sol.residual <= 1e-12
    assert float(torch.linalg.matrix_norm(matrix_residual(a, sol.Z, J)).max()) <= 1e-11


def test_newton_converges_quickly_for_small_inputs(generator):
    J = _random_inertia(generator, 1000, low=0.1, high=3.0)
    a = 0.05 * torch.rand(1000, 1, generator=generator, dtype=torch.float64) * torch.nn.functional.normalize(
        torch.randn(1000, 3, generator=generator, dtype=torch.float64), dim=-1
    )

    sol = solve_attitude(a, J, NewtonConfig(unroll_for_grad=1))

    assert sol.iterations <= 5
    assert float(torch.linalg.matrix_norm(matrix_residual(a, sol.Z, J)).max()) <= 1e-11


def test_newton_reports_divergence_without_a_solution():
    # isotropic J = I/3 has no solution once |a| > 1/3
    J = torch.eye(3, dtype=torch.float64) / 3.0
    a = torch.tensor([2.0 / 3.0, 0.0, 0.0], dtype=torch.float64)

    with pytest.raises(NewtonDiverged) as excinfo:
        solve_attitude(a, J)
    assert excinfo.value.iterations == 10

    unrolled = solve_attitude(a, J, NewtonConfig(mode="unroll", unroll_for_grad=4))
    assert unrolled.iterations == 4
    assert unrolled.residual > 1e-3


def test_integrator_settings_are_validated():
    with pytest.raises(ConfigError):
        IntegratorParams(h=0.0)
    with pytest.raises(ConfigError):
        IntegratorParams(h=0.01, alpha=1.5)
    with pytest.raises(ConfigError):
        NewtonConfig(max_iters=0)
    with pytest.raises(ConfigError):
        NewtonConfig(mode="exact")


def test_step_keeps_rotation_orthogonal(generator, fake_body):
    s = moving_state(generator)
    p = IntegratorParams(h=fake_body.h, alpha=0.3)

    states = rollout(s, _random_controls(generator, 50), fake_body, p)

    assert len(states) == 51
    assert states[0] is s
    assert float(orthogonality_trace(states).max()) < 1e-12


def test_legendre_transform_recovers_initial_momenta(generator):
    body = FakeRigidBody(inertia_growth=0.1)
    p = IntegratorParams(h=body.h, alpha=0.3)
    s0 = moving_state(generator)
    u = _random_controls(generator, 1)[0]
    forces = body.forces(s0.x, s0.R, u)

    s1 = step_se3(s0, forces, body, p)
    pi0, gamma0 = legendre_momenta(s0, s1, forces, body, p)

    assert torch.allclose(pi0, body.inertia(s0.x, s0.R) @ s0.omega, atol=1e-9)
    assert torch.allclose(gamma0, body.m * s0.v, atol=1e-9)


def test_hamiltonian_steps_satisfy_discrete_euler_lagrange(generator):
    body = FakeRigidBody(inertia_growth=0.1)
    p = IntegratorParams(h=body.h, alpha=0.3)
    controls = _random_controls(generator, 6)

    states = rollout(moving_state(generator), controls, body, p)

    for k in range(len(states) - 2):
        s0, s1, s2 = states[k : k + 3]
        res = euler_lagrange_residual(
            s0.pose,
            s1.pose,
            s2.pose,
            body.forces(s0.x, s0.R, controls[k]),
            body.forces(s1.x, s1.R, controls[k + 1]),
            body,
            p,
        )
        assert float(res.rotational) <= 1e-10
        assert float(res.translational) <= 1e-10


def test_position_only_steps_match_hamiltonian_steps(generator):
    body = FakeRigidBody(inertia_growth=0.1)
    p = IntegratorParams(h=body.h, alpha=0.3)
    controls = _random_controls(generator, 20)
    states = rollout(moving_state(generator), controls, body, p)

    forces = [body.forces(s.x, s.R, u) for s, u in zip(states, controls)]
    poses = [states[0].pose, states[1].pose]
    for k in range(1, len(controls)):
        poses.append(step_position_only(poses[k - 1], poses[k], forces[k - 1], forces[k], body, p))

    for pose, s in zip(poses, states):
        assert torch.allclose(pose.R, s.R, atol=1e-9)
        assert torch.allclose(pose.x, s.x, atol=1e-9)


def test_symmetric_step_is_time_reversible(generator, fake_body):
    p = IntegratorParams(h=fake_body.h, alpha=0.5)
    s0 = moving_state(generator)
    zero = DiscreteForces.zeros()

    s1 = step_se3(s0, zero, fake_body, p)
    back = step_se3(SE3State(s1.x, s1.R, -s1.v, -s1.omega), zero, fake_body, p)

    assert torch.allclose(back.R, s0.R, atol=1e-10)
    assert torch.allclose(back.x, s0.x, atol=1e-10)
    assert torch.allclose(back.v, -s0.v, atol=1e-10)
    assert torch.allclose(back.omega, -s0.omega, atol=1e-10)


def test_so3_step_matches_se3_step_for_pendulum(pendulum_truth):
    p = IntegratorParams(h=pendulum_truth.h)
    s = pendulum_embed(0.7, -1.2)
    u = torch.tensor([0.8], dtype=torch.float64)
    forces = pendulum_truth.forces(torch.zeros(3, dtype=torch.float64), s.R, u)

    so3 = step_so3(s, forces, pendulum_truth, p)
    se3 = step_se3(s.to_se3(), forces, pendulum_truth, p)

    assert torch.allclose(so3.R, se3.R, atol=1e-14)
    assert torch.allclose(so3.omega, se3.omega, atol=1e-14)


def test_pendulum_rollout_conserves_structure_and_energy(pendulum_truth):
    p = IntegratorParams(h=pendulum_truth.h)
    controls = torch.zeros(2000, 1, dtype=torch.float64)

    states = rollout(pendulum_embed(math.pi / 2, 0.0), controls, pendulum_truth, p)
    energy = energy_trace(states, pendulum_truth)

    assert float(orthogonality_trace(states).max()) <= 1e-11
    assert float((energy - energy[0]).abs().max()) <= 0.2
    assert abs(drift_slope(energy, p.h)) * 2000 * p.h <= 0.05


def test_symmetric_integrator_is_second_order():
    phi0, T = 1.0, 1.6
    omega = math.sqrt(15.0)

    ref_phi, ref_rate = pendulum_step(phi0, 0.0, 0.0, T, substeps=8000)

    def error(h):
        model = TruthPendulumModel(h=h)
        steps = round(T / h)
        states = rollout(pendulum_embed(phi0, 0.0), torch.zeros(steps, 1, dtype=torch.float64), model, IntegratorParams(h=h))
        phi, rate = pendulum_extract(states[-1])
        return math.hypot(float(phi - ref_phi), float(rate - ref_rate) / omega)

    ratio = error(0.02) / error(0.01)

    assert 3.5 <= ratio <= 4.5


def test_rollout_reports_failing_step(pendulum_truth):
    s = SO3State(torch.eye(3, dtype=torch.float64), torch.tensor([100.0, 0.0, 0.0], dtype=torch.float64))

    with pytest.raises(RolloutError) as excinfo:
        rollout(s, torch.zeros(3, 1, dtype=torch.float64), pendulum_truth, IntegratorParams(h=pendulum_truth.h))

    assert excinfo.value.step == 0
    assert isinstance(excinfo.value.cause, NewtonDiverged)


def test_unrolled_step_is_differentiable(pendulum_truth):
    p = IntegratorParams(h=pendulum_truth.h)
    cfg = NewtonConfig(mode="unroll", unroll_for_grad=6)
    R = pendulum_embed(0.4, 0.0).R
    zero = DiscreteForces.zeros()

    def advance(omega):
        return step_so3(SO3State(R, omega), zero, pendulum_truth, p, cfg).omega

    omega = torch.tensor([0.3, -0.2, 1.1], dtype=torch.float64, requires_grad=True)

    assert torch.autograd.gradcheck(advance, (omega,), eps=1e-6, atol=1e-6)
