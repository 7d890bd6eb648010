from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence, TypeVar

import torch

from fvin.common.errors import FvinError, RolloutError
from fvin.liegroup import SE3Pose, hat, orthogonality_error, vee
from fvin.logging import get_logger

from .models import DiscreteForces, IntegratorParams, NewtonConfig, SE3State, SO3State
from .newton import nonstandard_inertia
from .step import next_position, step_se3, step_so3, xi_of

if TYPE_CHECKING:
    from fvin.dynmodel.base import DynamicsModel

logger = get_logger(__name__)

State = TypeVar("State", SE3State, SO3State)


def _position(s: SE3State | SO3State) -> torch.Tensor:
    return s.x if isinstance(s, SE3State) else torch.zeros_like(s.omega)


def rollout(
    s0: State,
    controls: torch.Tensor | Sequence[torch.Tensor],
    model: "DynamicsModel",
    p: IntegratorParams,
    cfg: NewtonConfig | None = None,
) -> list[State]:
    """Apply ``controls`` one step at a time; element 0 of the result is ``s0``.

    ``SO3State`` inputs advance with the SO(3) restriction. Any failure is
    re-raised as ``RolloutError`` carrying the index of the failing step.
    """
    cfg = cfg or NewtonConfig()
    states: list[State] = [s0]
    s = s0
    for k, u in enumerate(controls):
        try:
            forces = model.forces(_position(s), s.R, u)
            if isinstance(s, SE3State):
                s = step_se3(s, forces, model, p, cfg)
            else:
                s = step_so3(s, forces, model, p, cfg)
            if not s.is_finite():
                raise FloatingPointError("non-finite state")
        except (FvinError, FloatingPointError) as exc:
            logger.debug("Rollout failed at step %d: %s", k, exc)
            raise RolloutError(k, exc) from exc
        states.append(s)
    return states


def total_energy(s: SE3State | SO3State, model: "DynamicsModel") -> torch.Tensor:
    """Kinetic plus potential energy: m|v|^2/2 + omega.J omega/2 + U."""
    x = _position(s)
    J = model.inertia(x, s.R)
    energy = 0.5 * (s.omega * (J @ s.omega[..., None]).squeeze(-1)).sum(-1) + model.potential(x, s.R).U
    if isinstance(s, SE3State) and model.convention.translational:
        energy = energy + 0.5 * model.mass(s.x, s.R) * (s.v * s.v).sum(-1)
    return energy


def orthogonality_trace(states: Sequence[SE3State | SO3State]) -> torch.Tensor:
    return torch.stack([orthogonality_error(s.R) for s in states])


def energy_trace(states: Sequence[SE3State | SO3State], model: "DynamicsModel") -> torch.Tensor:
    return torch.stack([total_energy(s, model) for s in states])


def drift_slope(values: torch.Tensor, h: float) -> float:
    """Least-squares slope of ``values`` against time t_k = k h."""
    t = torch.arange(values.shape[0], dtype=values.dtype) * h
    tc = t - t.mean()
    return float((tc * (values - values.mean())).sum() / (tc * tc).sum())


def legendre_momenta(
    s0: SE3State,
    s1: SE3State,
    forces: DiscreteForces,
    model: "DynamicsModel",
    p: IntegratorParams,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Recover (pi_0, gamma_0) from two consecutive poses via the discrete Legendre transform."""
    h, alpha = p.h, p.alpha
    J0 = model.inertia(s0.x, s0.R)
    Jd = nonstandard_inertia(J0)
    Z = s0.R.transpose(-1, -2) @ s1.R
    pot0 = model.potential(s0.x, s0.R)
    xi0 = xi_of(s0.R, pot0.dU_dR)
    pi0 = vee(Z @ Jd - Jd @ Z.transpose(-1, -2)) / h - (1.0 - alpha) * h * xi0 - forces.fR_minus

    m = model.mass(s0.x, s0.R)[..., None]
    push = (s0.R @ forces.fx_minus[..., None]).squeeze(-1)
    gamma0 = (m / h) * (s1.x - s0.x) + (1.0 - alpha) * h * pot0.dU_dx - push
    return pi0, gamma0


@dataclass(frozen=True, slots=True)
class ELResidual:
    rotational: torch.Tensor
    translational: torch.Tensor


def euler_lagrange_defects(
    x0: torch.Tensor,
    R0: torch.Tensor,
    x1: torch.Tensor,
    R1: torch.Tensor,
    x2: torch.Tensor,
    R2: torch.Tensor,
    forces0: DiscreteForces,
    forces1: DiscreteForces,
    model: "DynamicsModel",
    p: IntegratorParams,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Defects of the forced discrete Euler-Lagrange equations at the middle pose.

    The rotational defect is the matrix
    h^2 S(xi_1) + hS(fR-_1) + hS(fR+_0) + (J_d Z_0 - Z_0^T J_d) - (Z_1 J_d - J_d Z_1^T)
    with Z_0 = R_0^T R_1, Z_1 = R_1^T R_2 and J_d taken at the pose each Z leaves.
    The translational defect is x_2 minus the position recursion's prediction.
    """
    h = p.h
    Jd0 = nonstandard_inertia(model.inertia(x0, R0))
    Jd1 = nonstandard_inertia(model.inertia(x1, R1))
    Z0 = R0.transpose(-1, -2) @ R1
    Z1 = R1.transpose(-1, -2) @ R2
    pot1 = model.potential(x1, R1)
    xi1 = xi_of(R1, pot1.dU_dR)

    rot = (
        h * h * hat(xi1)
        + h * hat(forces1.fR_minus)
        + h * hat(forces0.fR_plus)
        + (Jd0 @ Z0 - Z0.transpose(-1, -2) @ Jd0)
        - (Z1 @ Jd1 - Jd1 @ Z1.transpose(-1, -2))
    )
    trans = x2 - next_position(x0, x1, R1, pot1.dU_dx, model.mass(x1, R1), forces0, forces1, h)
    return rot, trans


def euler_lagrange_residual(
    q0: SE3Pose,
    q1: SE3Pose,
    q2: SE3Pose,
    forces0: DiscreteForces,
    forces1: DiscreteForces,
    model: "DynamicsModel",
    p: IntegratorParams,
) -> ELResidual:
    rot, trans = euler_lagrange_defects(q0.x, q0.R, q1.x, q1.R, q2.x, q2.R, forces0, forces1, model, p)
    return ELResidual(
        rotational=torch.linalg.matrix_norm(rot),
        translational=torch.linalg.vector_norm(trans, dim=-1),
    )
