"""One step of the forced Lie group variational integrator.

Hamiltonian form (position-velocity): with pi = J omega and gamma = m v,

    hS(pi_k) + hS(fR-_k) + (1-alpha)h^2 S(xi_k) = Z_k J_d - J_d Z_k^T
    R_{k+1} = R_k Z_k
    pi_{k+1} = Z_k^T (pi_k + (1-alpha)h xi_k + fR-_k) + alpha h xi_{k+1} + fR+_k
    x_{k+1} = x_k + (h/m)(gamma_k - (1-alpha)h dU_k/dx + R_k fx-_k)
    gamma_{k+1} = gamma_k - (1-alpha)h dU_k/dx - alpha h dU_{k+1}/dx + R_k fx-_k + R_{k+1} fx+_k

Lagrangian form (position-only) eliminates the momenta between two steps.
The ``*_update`` functions work on raw tensors so the trainer can reuse them
under autograd; ``step_*`` wrap them with validated state types.
"""
from __future__ import annotations

from typing import TYPE_CHECKING

import torch

from fvin.liegroup import SE3Pose, vee

from .models import DiscreteForces, IntegratorParams, NewtonConfig, SE3State, SO3State
from .newton import AttitudeSolution, nonstandard_inertia, solve_attitude

if TYPE_CHECKING:
    from fvin.dynmodel.base import DynamicsModel


def _mv(M: torch.Tensor, v: torch.Tensor) -> torch.Tensor:
    return (M @ v[..., None]).squeeze(-1)


def xi_of(R: torch.Tensor, dU_dR: torch.Tensor) -> torch.Tensor:
    """Body-frame potential moment: hat(xi) = dU_dR^T R - R^T dU_dR."""
    return vee(dU_dR.transpose(-1, -2) @ R - R.transpose(-1, -2) @ dU_dR)


def attitude_update(
    pi: torch.Tensor,
    J: torch.Tensor,
    xi: torch.Tensor,
    fR_minus: torch.Tensor,
    p: IntegratorParams,
    cfg: NewtonConfig,
) -> AttitudeSolution:
    h, alpha = p.h, p.alpha
    a = h * pi + h * fR_minus + (1.0 - alpha) * h * h * xi
    return solve_attitude(a, J, cfg)


def momentum_update(
    Z: torch.Tensor,
    pi: torch.Tensor,
    xi0: torch.Tensor,
    xi1: torch.Tensor,
    fR_minus: torch.Tensor,
    fR_plus: torch.Tensor,
    p: IntegratorParams,
) -> torch.Tensor:
    h, alpha = p.h, p.alpha
    carried = _mv(Z.transpose(-1, -2), pi + (1.0 - alpha) * h * xi0 + fR_minus)
    return carried + alpha * h * xi1 + fR_plus


def se3_update(
    x: torch.Tensor,
    R: torch.Tensor,
    v: torch.Tensor,
    omega: torch.Tensor,
    forces: DiscreteForces,
    model: "DynamicsModel",
    p: IntegratorParams,
    cfg: NewtonConfig,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
    h, alpha = p.h, p.alpha
    J0 = model.inertia(x, R)
    pot0 = model.potential(x, R)
    xi0 = xi_of(R, pot0.dU_dR)
    pi0 = _mv(J0, omega)

    sol = attitude_update(pi0, J0, xi0, forces.fR_minus, p, cfg)
    R1 = R @ sol.Z

    m = model.mass(x, R)[..., None]
    gamma0 = m * v
    push = _mv(R, forces.fx_minus)
    x1 = x + (h / m) * (gamma0 - (1.0 - alpha) * h * pot0.dU_dx + push)

    pot1 = model.potential(x1, R1)
    xi1 = xi_of(R1, pot1.dU_dR)
    pi1 = momentum_update(sol.Z, pi0, xi0, xi1, forces.fR_minus, forces.fR_plus, p)
    gamma1 = (
        gamma0
        - (1.0 - alpha) * h * pot0.dU_dx
        - alpha * h * pot1.dU_dx
        + push
        + _mv(R1, forces.fx_plus)
    )

    J1 = model.inertia(x1, R1)
    omega1 = torch.linalg.solve(J1, pi1[..., None]).squeeze(-1)
    return x1, R1, gamma1 / m, omega1


def so3_update(
    R: torch.Tensor,
    omega: torch.Tensor,
    forces: DiscreteForces,
    model: "DynamicsModel",
    p: IntegratorParams,
    cfg: NewtonConfig,
) -> tuple[torch.Tensor, torch.Tensor]:
    x = torch.zeros_like(omega)
    J0 = model.inertia(x, R)
    xi0 = xi_of(R, model.potential(x, R).dU_dR)
    pi0 = _mv(J0, omega)

    sol = attitude_update(pi0, J0, xi0, forces.fR_minus, p, cfg)
    R1 = R @ sol.Z

    xi1 = xi_of(R1, model.potential(x, R1).dU_dR)
    pi1 = momentum_update(sol.Z, pi0, xi0, xi1, forces.fR_minus, forces.fR_plus, p)
    J1 = model.inertia(x, R1)
    return R1, torch.linalg.solve(J1, pi1[..., None]).squeeze(-1)


def next_position(
    x_prev: torch.Tensor,
    x: torch.Tensor,
    R: torch.Tensor,
    dU_dx: torch.Tensor,
    m: torch.Tensor,
    forces_prev: DiscreteForces,
    forces_curr: DiscreteForces,
    h: float,
) -> torch.Tensor:
    """x_{k+1} = 2x_k - x_{k-1} - (h^2/m) dU_k/dx + (h/m) R_k (fx-_k + fx+_{k-1})."""
    m = m[..., None]
    push = _mv(R, forces_curr.fx_minus + forces_prev.fx_plus)
    return 2.0 * x - x_prev - (h * h / m) * dU_dx + (h / m) * push


def position_only_update(
    x_prev: torch.Tensor,
    R_prev: torch.Tensor,
    x: torch.Tensor,
    R: torch.Tensor,
    forces_prev: DiscreteForces,
    forces_curr: DiscreteForces,
    model: "DynamicsModel",
    p: IntegratorParams,
    cfg: NewtonConfig,
) -> tuple[torch.Tensor, torch.Tensor]:
    h = p.h
    Jd_prev = nonstandard_inertia(model.inertia(x_prev, R_prev))
    Z_prev = R_prev.transpose(-1, -2) @ R
    carried = vee(Jd_prev @ Z_prev - Z_prev.transpose(-1, -2) @ Jd_prev)

    pot = model.potential(x, R)
    xi = xi_of(R, pot.dU_dR)
    a = h * h * xi + h * forces_curr.fR_minus + h * forces_prev.fR_plus + carried
    sol = solve_attitude(a, model.inertia(x, R), cfg)

    x_next = next_position(x_prev, x, R, pot.dU_dx, model.mass(x, R), forces_prev, forces_curr, h)
    return x_next, R @ sol.Z


def step_se3(
    s: SE3State,
    forces: DiscreteForces,
    model: "DynamicsModel",
    p: IntegratorParams,
    cfg: NewtonConfig | None = None,
) -> SE3State:
    x1, R1, v1, omega1 = se3_update(s.x, s.R, s.v, s.omega, forces, model, p, cfg or NewtonConfig())
    return SE3State(x1, R1, v1, omega1)


def step_so3(
    s: SO3State,
    forces: DiscreteForces,
    model: "DynamicsModel",
    p: IntegratorParams,
    cfg: NewtonConfig | None = None,
) -> SO3State:
    R1, omega1 = so3_update(s.R, s.omega, forces, model, p, cfg or NewtonConfig())
    return SO3State(R1, omega1)


def step_position_only(
    q_prev: SE3Pose,
    q_curr: SE3Pose,
    forces_prev: DiscreteForces,
    forces_curr: DiscreteForces,
    model: "DynamicsModel",
    p: IntegratorParams,
    cfg: NewtonConfig | None = None,
) -> SE3Pose:
    x_next, R_next = position_only_update(
        q_prev.x, q_prev.R, q_curr.x, q_curr.R, forces_prev, forces_curr, model, p, cfg or NewtonConfig()
    )
    return SE3Pose(x_next, R_next)
