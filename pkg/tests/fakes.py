from __future__ import annotations

import math
from dataclasses import dataclass, field

import torch

from fvin.common.config import ForceConvention
from fvin.dynmodel.base import PotentialEval, check_control
from fvin.integrator.models import DiscreteForces, SE3State
from fvin.liegroup import exp_so3


def _batch(x: torch.Tensor, R: torch.Tensor) -> torch.Size:
    return torch.broadcast_shapes(x.shape[:-1], R.shape[:-2])


def _default_inertia() -> torch.Tensor:
    return torch.tensor(
        [[0.9, 0.05, -0.02], [0.05, 1.3, 0.04], [-0.02, 0.04, 1.7]],
        dtype=torch.float64,
    )


@dataclass(frozen=True)
class FakeRigidBody:
    """Heavy-top-like body on SE(3) with a spring on x and a tilt potential on R.

    With ``inertia_growth`` > 0 the inertia depends on the position, which
    exercises the state-dependent J paths.
    """

    h: float = 0.02
    m: float = 0.7
    J0: torch.Tensor = field(default_factory=_default_inertia)
    k: float = 2.0
    tilt: float = 1.5
    twist: float = 0.3
    inertia_growth: float = 0.0

    @property
    def convention(self) -> ForceConvention:
        return ForceConvention.QUADROTOR_SE3

    def mass(self, x: torch.Tensor, R: torch.Tensor) -> torch.Tensor:
        return torch.full(_batch(x, R), self.m, dtype=torch.float64)

    def inertia(self, x: torch.Tensor, R: torch.Tensor) -> torch.Tensor:
        batch = _batch(x, R)
        J = self.J0.expand(*batch, 3, 3)
        if self.inertia_growth:
            r2 = (x * x).sum(-1).expand(batch)
            J = J + self.inertia_growth * r2[..., None, None] * torch.eye(3, dtype=torch.float64)
        return J

    def potential(self, x: torch.Tensor, R: torch.Tensor) -> PotentialEval:
        batch = _batch(x, R)
        U = 0.5 * self.k * (x * x).sum(-1) + self.tilt * (1.0 - R[..., 2, 2]) + self.twist * R[..., 0, 1]
        dU_dR = torch.zeros(*batch, 3, 3, dtype=torch.float64)
        dU_dR[..., 2, 2] = -self.tilt
        dU_dR[..., 0, 1] = self.twist
        return PotentialEval(U.expand(batch), (self.k * x).expand(*batch, 3), dU_dR)

    def forces(self, x: torch.Tensor, R: torch.Tensor, u: torch.Tensor) -> DiscreteForces:
        check_control(self.convention, u)
        batch = torch.broadcast_shapes(_batch(x, R), u.shape[:-1])
        fx = torch.zeros(*batch, 3, dtype=torch.float64)
        fx[..., 2] = 0.5 * self.h * u[..., 0]
        fR = (0.5 * self.h * u[..., 1:]).expand(*batch, 3)
        return DiscreteForces(fR_minus=fR, fR_plus=fR, fx_minus=fx, fx_plus=fx)


def random_rotations(generator: torch.Generator, n: int, max_angle: float = math.pi) -> torch.Tensor:
    axis = torch.randn(n, 3, generator=generator, dtype=torch.float64)
    axis = axis / torch.linalg.vector_norm(axis, dim=-1, keepdim=True)
    angle = torch.rand(n, 1, generator=generator, dtype=torch.float64) * max_angle
    return exp_so3(axis * angle)


def moving_state(generator: torch.Generator) -> SE3State:
    def vec(scale: float) -> torch.Tensor:
        return scale * torch.randn(3, generator=generator, dtype=torch.float64)

    R = random_rotations(generator, 1, max_angle=1.0)[0]
    return SE3State(vec(0.3), R, vec(0.5), vec(0.8))
