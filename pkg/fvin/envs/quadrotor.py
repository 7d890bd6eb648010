from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch

from fvin.common.config import ForceConvention
from fvin.common.errors import ControllerDiverged
from fvin.integrator.models import SE3State
from fvin.liegroup import exp_so3, hat, project_to_so3, vee
from fvin.logging import get_logger
from fvin.trainer.models import TransitionP, TransitionPV

from .datagen import DataGenSpec, evenly_spaced, trajectory_rng
from .truth import QuadrotorTruth

logger = get_logger(__name__)

RK4_SUBSTEPS = 10

# sanity bounds for generated trajectories
MAX_POSITION = 10.0
MAX_SPEED = 20.0
MAX_RATE = 50.0


def _e3(like: torch.Tensor) -> torch.Tensor:
    return torch.tensor([0.0, 0.0, 1.0], dtype=like.dtype)


def _derivatives(x, R, v, w, u, truth: QuadrotorTruth, J: torch.Tensor, J_inv: torch.Tensor):
    f, tau = u[..., 0], u[..., 1:]
    v_dot = (f / truth.mass)[..., None] * R[..., :, 2] - truth.gravity * _e3(x)
    Jw = (J @ w[..., None]).squeeze(-1)
    w_dot = (J_inv @ (tau - torch.linalg.cross(w, Jw, dim=-1))[..., None]).squeeze(-1)
    return v, R @ hat(w), v_dot, w_dot


def quad_step(
    s: SE3State,
    u: torch.Tensor,
    h: float,
    truth: QuadrotorTruth = QuadrotorTruth(),
    substeps: int = RK4_SUBSTEPS,
) -> SE3State:
    """RK4 on x' = v, R' = R S(w), m v' = f R e3 - m g e3, J w' = tau - w x J w.

    ``v`` is the world-frame velocity. R is projected back onto SO(3) after
    every substep.
    """
    u = torch.as_tensor(u, dtype=torch.float64)
    J = truth.J
    J_inv = torch.linalg.inv(J)
    dt = h / substeps
    x, R, v, w = s.x, s.R, s.v, s.omega
    for _ in range(substeps):
        k1 = _derivatives(x, R, v, w, u, truth, J, J_inv)
        k2 = _derivatives(*(a + 0.5 * dt * k for a, k in zip((x, R, v, w), k1)), u, truth, J, J_inv)
        k3 = _derivatives(*(a + 0.5 * dt * k for a, k in zip((x, R, v, w), k2)), u, truth, J, J_inv)
        k4 = _derivatives(*(a + dt * k for a, k in zip((x, R, v, w), k3)), u, truth, J, J_inv)
        x, R, v, w = (
            a + dt / 6.0 * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
            for a, d1, d2, d3, d4 in zip((x, R, v, w), k1, k2, k3, k4)
        )
        R = project_to_so3(R)
    return SE3State(x, R, v, w)


@dataclass(frozen=True, slots=True)
class ControllerGains:
    kp_pos: float = 4.0
    kd_pos: float = 3.0
    kp_att: float = 2e-3
    kd_att: float = 3e-4


def clip_control(u: torch.Tensor, truth: QuadrotorTruth) -> torch.Tensor:
    lo, hi = truth.control_bounds()
    return torch.minimum(torch.maximum(u, lo), hi)


def geometric_pd_control(
    s: SE3State,
    target_x: torch.Tensor,
    target_yaw: float,
    truth: QuadrotorTruth = QuadrotorTruth(),
    gains: ControllerGains = ControllerGains(),
) -> torch.Tensor:
    """Position PD -> desired force -> thrust and desired attitude; attitude PD -> torque.

    Returns the clipped control [f, tau].
    """
    e3 = _e3(s.x)
    force = truth.mass * (-gains.kp_pos * (s.x - target_x) - gains.kd_pos * s.v + truth.gravity * e3)
    thrust = torch.dot(force, s.R[:, 2])

    b3 = force / torch.linalg.vector_norm(force)
    heading = torch.tensor([math.cos(target_yaw), math.sin(target_yaw), 0.0], dtype=torch.float64)
    b2 = torch.linalg.cross(b3, heading)
    b2 = b2 / torch.linalg.vector_norm(b2)
    b1 = torch.linalg.cross(b2, b3)
    R_des = torch.stack((b1, b2, b3), dim=-1)

    rel = R_des.transpose(-1, -2) @ s.R
    e_R = 0.5 * vee(rel - rel.transpose(-1, -2))
    Jw = truth.J @ s.omega
    torque = -gains.kp_att * e_R - gains.kd_att * s.omega + torch.linalg.cross(s.omega, Jw)
    return clip_control(torch.cat((thrust.reshape(1), torque)), truth)


def _check_sane(s: SE3State, trajectory: int, step: int) -> None:
    if not s.is_finite():
        raise ControllerDiverged(trajectory, step, "non-finite state")
    if float(torch.linalg.vector_norm(s.x)) > MAX_POSITION:
        raise ControllerDiverged(trajectory, step, "position out of bounds")
    if float(torch.linalg.vector_norm(s.v)) > MAX_SPEED:
        raise ControllerDiverged(trajectory, step, "speed out of bounds")
    if float(torch.linalg.vector_norm(s.omega)) > MAX_RATE:
        raise ControllerDiverged(trajectory, step, "angular rate out of bounds")


def random_start(rng: np.random.Generator, spec: DataGenSpec) -> tuple[SE3State, torch.Tensor, float]:
    """Start pose in the cube, tilt <= ``start_tilt``, at rest; plus a target position and yaw."""
    w = spec.start_half_width
    x0 = torch.as_tensor(rng.uniform(-w, w, size=3))
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    R0 = exp_so3(torch.as_tensor(axis * rng.uniform(0.0, spec.start_tilt)))
    target = torch.as_tensor(rng.uniform(-w, w, size=3))
    yaw = float(rng.uniform(-math.pi, math.pi))
    zeros = torch.zeros(3, dtype=torch.float64)
    return SE3State(x0, R0, zeros, zeros.clone()), target, yaw


def simulate_to_target(
    s0: SE3State,
    target: torch.Tensor,
    yaw: float,
    steps: int,
    h: float,
    *,
    truth: QuadrotorTruth = QuadrotorTruth(),
    gains: ControllerGains = ControllerGains(),
    trajectory: int = 0,
) -> tuple[list[SE3State], torch.Tensor]:
    states = [s0]
    controls = []
    for k in range(steps):
        u = geometric_pd_control(states[-1], target, yaw, truth, gains)
        s = quad_step(states[-1], u, h, truth)
        _check_sane(s, trajectory, k)
        states.append(s)
        controls.append(u)
    return states, torch.stack(controls)


def _stack(states: list[SE3State], name: str, index: np.ndarray) -> torch.Tensor:
    return torch.stack([getattr(states[i], name) for i in index.tolist()])


def generate_quadrotor_dataset(
    spec: DataGenSpec,
    truth: QuadrotorTruth = QuadrotorTruth(),
    gains: ControllerGains = ControllerGains(),
) -> TransitionPV | TransitionP:
    """Fly to ``spec.trajectories`` random targets; keep evenly spaced transitions of each flight."""
    parts = []
    for i in range(spec.trajectories):
        rng = trajectory_rng(spec.seed, i)
        s0, target, yaw = random_start(rng, spec)
        states, controls = simulate_to_target(s0, target, yaw, spec.steps, spec.h, truth=truth, gains=gains, trajectory=i)
        if spec.kind == "pv":
            k = evenly_spaced(spec.steps, spec.keep_per_trajectory)
            parts.append(
                TransitionPV(
                    x0=_stack(states, "x", k),
                    R0=_stack(states, "R", k),
                    v0=_stack(states, "v", k),
                    omega0=_stack(states, "omega", k),
                    u0=controls[k],
                    x1=_stack(states, "x", k + 1),
                    R1=_stack(states, "R", k + 1),
                    v1=_stack(states, "v", k + 1),
                    omega1=_stack(states, "omega", k + 1),
                )
            )
        else:
            k = evenly_spaced(spec.steps - 1, spec.keep_per_trajectory)
            parts.append(
                TransitionP(
                    x0=_stack(states, "x", k),
                    R0=_stack(states, "R", k),
                    x1=_stack(states, "x", k + 1),
                    R1=_stack(states, "R", k + 1),
                    x2=_stack(states, "x", k + 2),
                    R2=_stack(states, "R", k + 2),
                    u0=controls[k],
                    u1=controls[k + 1],
                )
            )
        logger.debug("Quadrotor trajectory %d: final position error %.3e m", i, float(torch.linalg.vector_norm(states[-1].x - target)))
    data = type(parts[0]).concat(parts)
    logger.info("Generated %d quadrotor transitions (%s) from %d flights", len(data), spec.kind, spec.trajectories)
    return data


class QuadrotorEnv:
    """True quadrotor advanced by the RK4 rigid-body simulator; controls are clipped to the actuator box."""

    convention = ForceConvention.QUADROTOR_SE3

    def __init__(self, h: float, truth: QuadrotorTruth = QuadrotorTruth()) -> None:
        self.h = h
        self.truth = truth
        zeros = torch.zeros(3, dtype=torch.float64)
        self._state = SE3State(zeros, torch.eye(3, dtype=torch.float64), zeros, zeros)
        self.steps = 0

    def reset(self, state: SE3State | None = None) -> SE3State:
        if state is not None:
            self._state = state
        else:
            zeros = torch.zeros(3, dtype=torch.float64)
            self._state = SE3State(zeros, torch.eye(3, dtype=torch.float64), zeros, zeros)
        self.steps = 0
        return self._state

    @property
    def state(self) -> SE3State:
        return self._state

    def step(self, u: torch.Tensor) -> SE3State:
        self._state = quad_step(self._state, clip_control(torch.as_tensor(u, dtype=torch.float64), self.truth), self.h, self.truth)
        self.steps += 1
        return self._state
