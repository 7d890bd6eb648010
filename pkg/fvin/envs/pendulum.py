from __future__ import annotations

import math

import numpy as np
import torch

from fvin.common.config import ForceConvention
from fvin.integrator.models import SO3State
from fvin.liegroup import exp_so3
from fvin.logging import get_logger
from fvin.trainer.models import TransitionP, TransitionPV

from .datagen import DataGenSpec, trajectory_rng
from .truth import PendulumTruth

logger = get_logger(__name__)

RK4_SUBSTEPS = 10


def pendulum_step(
    phi: torch.Tensor | float,
    phi_dot: torch.Tensor | float,
    u: torch.Tensor | float,
    h: float,
    truth: PendulumTruth = PendulumTruth(),
    substeps: int = RK4_SUBSTEPS,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Classical RK4 on (phi, phi_dot) with ``substeps`` substeps of h/substeps; u is held."""
    phi = torch.as_tensor(phi, dtype=torch.float64)
    w = torch.as_tensor(phi_dot, dtype=torch.float64)
    u = torch.as_tensor(u, dtype=torch.float64)
    dt = h / substeps

    def f(p: torch.Tensor, v: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        return v, truth.acceleration(p, u)

    for _ in range(substeps):
        k1p, k1v = f(phi, w)
        k2p, k2v = f(phi + 0.5 * dt * k1p, w + 0.5 * dt * k1v)
        k3p, k3v = f(phi + 0.5 * dt * k2p, w + 0.5 * dt * k2v)
        k4p, k4v = f(phi + dt * k3p, w + dt * k3v)
        phi = phi + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        w = w + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return phi, w


def pendulum_embed(phi: torch.Tensor | float, phi_dot: torch.Tensor | float) -> SO3State:
    """R = exp((0, 0, phi)), omega = (0, 0, phi_dot)."""
    phi = torch.as_tensor(phi, dtype=torch.float64)
    phi_dot = torch.as_tensor(phi_dot, dtype=torch.float64)
    phi, phi_dot = torch.broadcast_tensors(phi, phi_dot)
    zeros = torch.zeros_like(phi)
    R = exp_so3(torch.stack((zeros, zeros, phi), dim=-1))
    return SO3State(R, torch.stack((zeros, zeros, phi_dot), dim=-1))


def pendulum_extract(s: SO3State) -> tuple[torch.Tensor, torch.Tensor]:
    return torch.atan2(s.R[..., 1, 0], s.R[..., 0, 0]), s.omega[..., 2]


def pendulum_trajectories(spec: DataGenSpec, truth: PendulumTruth = PendulumTruth()):
    """Angles, rates and controls of every trajectory: shapes (n, steps + 1) and (n,)."""
    phi0 = np.empty(spec.trajectories)
    rate0 = np.empty(spec.trajectories)
    controls = np.empty(spec.trajectories)
    for i in range(spec.trajectories):
        rng = trajectory_rng(spec.seed, i)
        # uniform on (-pi, pi]
        phi0[i] = math.pi - rng.uniform(0.0, 2.0 * math.pi)
        rate0[i] = rng.uniform(-1.0, 1.0)
        controls[i] = rng.uniform(spec.control_low, spec.control_high)

    phi = [torch.as_tensor(phi0)]
    rate = [torch.as_tensor(rate0)]
    u = torch.as_tensor(controls)
    for _ in range(spec.steps):
        p, w = pendulum_step(phi[-1], rate[-1], u, spec.h, truth)
        phi.append(p)
        rate.append(w)
    return torch.stack(phi, dim=1), torch.stack(rate, dim=1), u


def generate_pendulum_dataset(spec: DataGenSpec, truth: PendulumTruth = PendulumTruth()) -> TransitionPV | TransitionP:
    """Random (phi0, phi_dot0, u) per trajectory, u held for ``spec.steps`` steps of ``spec.h``.

    ``kind="pv"`` yields every consecutive pair as a TransitionPV (trajectory
    major); ``kind="p"`` yields consecutive pose triples.
    """
    phi, rate, u = pendulum_trajectories(spec, truth)
    states = pendulum_embed(phi, rate)
    n, T = phi.shape
    controls = u[:, None, None].expand(n, T, 1)
    zeros = torch.zeros(n, T, 3, dtype=torch.float64)

    if spec.kind == "pv":
        data = TransitionPV(
            x0=zeros[:, :-1].reshape(-1, 3),
            R0=states.R[:, :-1].reshape(-1, 3, 3),
            v0=zeros[:, :-1].reshape(-1, 3),
            omega0=states.omega[:, :-1].reshape(-1, 3),
            u0=controls[:, :-1].reshape(-1, 1),
            x1=zeros[:, 1:].reshape(-1, 3),
            R1=states.R[:, 1:].reshape(-1, 3, 3),
            v1=zeros[:, 1:].reshape(-1, 3),
            omega1=states.omega[:, 1:].reshape(-1, 3),
        )
    else:
        data = TransitionP(
            x0=zeros[:, :-2].reshape(-1, 3),
            R0=states.R[:, :-2].reshape(-1, 3, 3),
            x1=zeros[:, 1:-1].reshape(-1, 3),
            R1=states.R[:, 1:-1].reshape(-1, 3, 3),
            x2=zeros[:, 2:].reshape(-1, 3),
            R2=states.R[:, 2:].reshape(-1, 3, 3),
            u0=controls[:, :-2].reshape(-1, 1),
            u1=controls[:, 1:-1].reshape(-1, 1),
        )
    logger.info("Generated %d pendulum transitions (%s) from %d trajectories", len(data), spec.kind, n)
    return data


class PendulumEnv:
    """True pendulum advanced by RK4, observed through the SO(3) embedding."""

    convention = ForceConvention.PENDULUM_SO3

    def __init__(self, h: float, truth: PendulumTruth = PendulumTruth()) -> None:
        self.h = h
        self.truth = truth
        self._phi = torch.tensor(0.0, dtype=torch.float64)
        self._rate = torch.tensor(0.0, dtype=torch.float64)
        self.steps = 0

    def reset(self, phi: float = 0.0, phi_dot: float = 0.0) -> SO3State:
        self._phi = torch.tensor(float(phi), dtype=torch.float64)
        self._rate = torch.tensor(float(phi_dot), dtype=torch.float64)
        self.steps = 0
        return self.state

    @property
    def state(self) -> SO3State:
        return pendulum_embed(self._phi, self._rate)

    @property
    def angle(self) -> tuple[float, float]:
        return float(self._phi), float(self._rate)

    def step(self, u: torch.Tensor) -> SO3State:
        control = torch.as_tensor(u, dtype=torch.float64).reshape(-1)[0]
        self._phi, self._rate = pendulum_step(self._phi, self._rate, control, self.h, self.truth)
        self.steps += 1
        return self.state
