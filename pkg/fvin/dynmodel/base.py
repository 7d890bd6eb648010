from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import torch

from fvin.common.config import ForceConvention
from fvin.common.errors import DimMismatch
from fvin.integrator.models import DiscreteForces


@dataclass(frozen=True, slots=True)
class PotentialEval:
    U: torch.Tensor
    dU_dx: torch.Tensor
    dU_dR: torch.Tensor


@runtime_checkable
class DynamicsModel(Protocol):
    """Everything the integrator queries about a rigid body.

    Configurations arrive as ``x`` of shape ``(..., 3)`` and ``R`` of shape
    ``(..., 3, 3)``; SO(3) models ignore ``x``.
    """

    @property
    def convention(self) -> ForceConvention: ...

    def mass(self, x: torch.Tensor, R: torch.Tensor) -> torch.Tensor: ...

    def inertia(self, x: torch.Tensor, R: torch.Tensor) -> torch.Tensor: ...

    def potential(self, x: torch.Tensor, R: torch.Tensor) -> PotentialEval: ...

    def forces(self, x: torch.Tensor, R: torch.Tensor, u: torch.Tensor) -> DiscreteForces: ...


def flatten_configuration(convention: ForceConvention, x: torch.Tensor, R: torch.Tensor) -> torch.Tensor:
    """Network input: R row-major (9) on SO(3), [x, R row-major] (12) on SE(3)."""
    flat_R = R.flatten(-2)
    if convention is ForceConvention.PENDULUM_SO3:
        return flat_R
    batch = torch.broadcast_shapes(x.shape[:-1], flat_R.shape[:-1])
    return torch.cat((x.expand(*batch, 3), flat_R.expand(*batch, 9)), dim=-1)


def unflatten_configuration(convention: ForceConvention, q: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    if q.shape[-1] != convention.q_dim:
        raise DimMismatch(f"{convention.value} expects {convention.q_dim} configuration entries, got {q.shape[-1]}")
    if convention is ForceConvention.PENDULUM_SO3:
        return torch.zeros(*q.shape[:-1], 3, dtype=q.dtype), q.unflatten(-1, (3, 3))
    return q[..., :3], q[..., 3:].unflatten(-1, (3, 3))


def inertia_at(model: DynamicsModel, q: torch.Tensor) -> torch.Tensor:
    x, R = unflatten_configuration(model.convention, q)
    return model.inertia(x, R)


def potential_at(model: DynamicsModel, q: torch.Tensor) -> PotentialEval:
    x, R = unflatten_configuration(model.convention, q)
    return model.potential(x, R)


def forces_at(model: DynamicsModel, q: torch.Tensor, u: torch.Tensor) -> DiscreteForces:
    x, R = unflatten_configuration(model.convention, q)
    return model.forces(x, R, u)


def check_control(convention: ForceConvention, u: torch.Tensor) -> None:
    if u.shape[-1:] != (convention.u_dim,):
        raise DimMismatch(f"{convention.value} expects controls of dimension {convention.u_dim}, got {tuple(u.shape)}")
