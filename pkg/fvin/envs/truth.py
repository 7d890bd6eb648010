"""Ground-truth physical constants and their exact DynamicsModel counterparts.

Discrete forces are impulses over one step, so the truth gains carry a factor h.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import torch

from fvin.common.config import ForceConvention
from fvin.dynmodel.base import PotentialEval, check_control
from fvin.integrator.models import DiscreteForces

GRAVITY = 9.81


def _batch(x: torch.Tensor, R: torch.Tensor) -> torch.Size:
    return torch.broadcast_shapes(x.shape[:-1], R.shape[:-2])


@dataclass(frozen=True, slots=True)
class PendulumTruth:
    """phi'' = -15 sin(phi) + 3u, i.e. J = 1/3, U = 5(1 - cos phi), g = 1."""

    inertia: float = 1.0 / 3.0
    potential_scale: float = 5.0
    gain: float = 1.0

    def acceleration(self, phi: torch.Tensor, u: torch.Tensor) -> torch.Tensor:
        return (-self.potential_scale * torch.sin(phi) + self.gain * u) / self.inertia

    def potential(self, phi: torch.Tensor) -> torch.Tensor:
        return self.potential_scale * (1.0 - torch.cos(phi))

    def energy(self, phi: torch.Tensor, phi_dot: torch.Tensor) -> torch.Tensor:
        return 0.5 * self.inertia * phi_dot * phi_dot + self.potential(phi)


@dataclass(frozen=True, slots=True)
class QuadrotorTruth:
    """Crazyflie-class rigid body; u = [f, tau] with thrust along body e3."""

    mass: float = 0.027
    inertia_diag: tuple[float, float, float] = (1.4e-5, 1.4e-5, 2.17e-5)
    gravity: float = GRAVITY
    thrust_max: float = 0.595
    torque_max: tuple[float, float, float] = (5.9e-3, 5.9e-3, 7.4e-3)

    @property
    def J(self) -> torch.Tensor:
        return torch.diag(torch.tensor(self.inertia_diag, dtype=torch.float64))

    @property
    def hover_thrust(self) -> float:
        return self.mass * self.gravity

    def control_bounds(self) -> tuple[torch.Tensor, torch.Tensor]:
        tau = torch.tensor(self.torque_max, dtype=torch.float64)
        lo = torch.cat((torch.zeros(1, dtype=torch.float64), -tau))
        hi = torch.cat((torch.tensor([self.thrust_max], dtype=torch.float64), tau))
        return lo, hi


@dataclass(frozen=True)
class TruthPendulumModel:
    """The pendulum on SO(3) about e3: J = I/3, U(R) = 5(1 - R[0, 0]), g(q) = h e3."""

    h: float
    truth: PendulumTruth = field(default_factory=PendulumTruth)

    @property
    def convention(self) -> ForceConvention:
        return ForceConvention.PENDULUM_SO3

    def mass(self, x: torch.Tensor, R: torch.Tensor) -> torch.Tensor:
        return torch.ones(_batch(x, R), dtype=R.dtype)

    def inertia(self, x: torch.Tensor, R: torch.Tensor) -> torch.Tensor:
        J = self.truth.inertia * torch.eye(3, dtype=R.dtype)
        return J.expand(*R.shape[:-2], 3, 3)

    def potential(self, x: torch.Tensor, R: torch.Tensor) -> PotentialEval:
        k = self.truth.potential_scale
        U = k * (1.0 - R[..., 0, 0])
        dU_dR = torch.zeros_like(R)
        dU_dR[..., 0, 0] = -k
        return PotentialEval(U, torch.zeros(*R.shape[:-2], 3, dtype=R.dtype), dU_dR)

    def gains(self, x: torch.Tensor, R: torch.Tensor) -> torch.Tensor:
        g = torch.zeros(*R.shape[:-2], 3, dtype=R.dtype)
        g[..., 2] = self.h * self.truth.gain
        return g

    def forces(self, x: torch.Tensor, R: torch.Tensor, u: torch.Tensor) -> DiscreteForces:
        check_control(self.convention, u)
        fR = self.gains(x, R) * u
        zero = torch.zeros_like(fR)
        return DiscreteForces(fR_minus=fR, fR_plus=zero, fx_minus=zero, fx_plus=zero)


@dataclass(frozen=True)
class TruthQuadrotorModel:
    """Quadrotor on SE(3): U = m g x3, g_x = h [e3 0 0 0], g_R = h [0 I3], split evenly."""

    h: float
    truth: QuadrotorTruth = field(default_factory=QuadrotorTruth)

    @property
    def convention(self) -> ForceConvention:
        return ForceConvention.QUADROTOR_SE3

    def mass(self, x: torch.Tensor, R: torch.Tensor) -> torch.Tensor:
        return torch.full(_batch(x, R), self.truth.mass, dtype=R.dtype)

    def inertia(self, x: torch.Tensor, R: torch.Tensor) -> torch.Tensor:
        return self.truth.J.to(R.dtype).expand(*_batch(x, R), 3, 3)

    def potential(self, x: torch.Tensor, R: torch.Tensor) -> PotentialEval:
        batch = _batch(x, R)
        mg = self.truth.mass * self.truth.gravity
        U = mg * x[..., 2].expand(batch)
        dU_dx = torch.zeros(*batch, 3, dtype=R.dtype)
        dU_dx[..., 2] = mg
        return PotentialEval(U, dU_dx, torch.zeros(*batch, 3, 3, dtype=R.dtype))

    def gains(self, x: torch.Tensor, R: torch.Tensor) -> torch.Tensor:
        g = torch.zeros(*_batch(x, R), 6, 4, dtype=R.dtype)
        g[..., 2, 0] = self.h
        g[..., 3, 1] = self.h
        g[..., 4, 2] = self.h
        g[..., 5, 3] = self.h
        return g

    def forces(self, x: torch.Tensor, R: torch.Tensor, u: torch.Tensor) -> DiscreteForces:
        check_control(self.convention, u)
        f = 0.5 * (self.gains(x, R) @ u[..., None]).squeeze(-1)
        fx, fR = f[..., :3], f[..., 3:]
        return DiscreteForces(fR_minus=fR, fR_plus=fR, fx_minus=fx, fx_plus=fx)


def truth_model(convention: ForceConvention, h: float) -> TruthPendulumModel | TruthQuadrotorModel:
    if convention is ForceConvention.PENDULUM_SO3:
        return TruthPendulumModel(h)
    return TruthQuadrotorModel(h)
