from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import torch

from fvin.integrator.models import IntegratorParams, NewtonConfig
from fvin.integrator.newton import matrix_residual
from fvin.integrator.step import momentum_update, next_position, position_only_update, se3_update, xi_of

from .models import TransitionP, TransitionPV

if TYPE_CHECKING:
    from fvin.dynmodel.base import DynamicsModel


@dataclass(frozen=True, slots=True)
class PredictionPV:
    x1: torch.Tensor
    R1: torch.Tensor
    v1: torch.Tensor
    omega1: torch.Tensor


@dataclass(frozen=True, slots=True)
class PredictionIb:
    x1: torch.Tensor
    v1: torch.Tensor
    omega1: torch.Tensor
    # hS(J w0) + hS(fR-) + (1-alpha)h^2 S(xi0) - (Z0 J_d - J_d Z0^T) at the observed Z0
    attitude_defect: torch.Tensor


def predict_Ia(batch: TransitionPV, model: "DynamicsModel", p: IntegratorParams, cfg: NewtonConfig) -> PredictionPV:
    """Solve for Z0, then advance exactly as the integrator step does."""
    forces = model.forces(batch.x0, batch.R0, batch.u0)
    x1, R1, v1, omega1 = se3_update(batch.x0, batch.R0, batch.v0, batch.omega0, forces, model, p, cfg)
    return PredictionPV(x1, R1, v1, omega1)


def predict_Ib(batch: TransitionPV, model: "DynamicsModel", p: IntegratorParams) -> PredictionIb:
    """Velocity update from the observed Z0 = R0^T R1; no attitude solve.

    Quantities at time 1 (xi_1, dU_1/dx, J) are evaluated at the observed pose.
    """
    h, alpha = p.h, p.alpha
    x0, R0, x1, R1 = batch.x0, batch.R0, batch.x1, batch.R1
    forces = model.forces(x0, R0, batch.u0)

    J0 = model.inertia(x0, R0)
    pot0 = model.potential(x0, R0)
    xi0 = xi_of(R0, pot0.dU_dR)
    pi0 = (J0 @ batch.omega0[..., None]).squeeze(-1)
    Z0 = R0.transpose(-1, -2) @ R1
    a = h * pi0 + h * forces.fR_minus + (1.0 - alpha) * h * h * xi0
    defect = matrix_residual(a, Z0, J0)

    pot1 = model.potential(x1, R1)
    xi1 = xi_of(R1, pot1.dU_dR)
    pi1 = momentum_update(Z0, pi0, xi0, xi1, forces.fR_minus, forces.fR_plus, p)
    omega1 = torch.linalg.solve(model.inertia(x1, R1), pi1[..., None]).squeeze(-1)

    m = model.mass(x0, R0)[..., None]
    gamma0 = m * batch.v0
    push = (R0 @ forces.fx_minus[..., None]).squeeze(-1)
    x1_pred = x0 + (h / m) * (gamma0 - (1.0 - alpha) * h * pot0.dU_dx + push)
    gamma1 = (
        gamma0
        - (1.0 - alpha) * h * pot0.dU_dx
        - alpha * h * pot1.dU_dx
        + push
        + (R1 @ forces.fx_plus[..., None]).squeeze(-1)
    )
    return PredictionIb(x1=x1_pred, v1=gamma1 / m, omega1=omega1, attitude_defect=defect)


def predict_IIa(
    batch: TransitionP, model: "DynamicsModel", p: IntegratorParams, cfg: NewtonConfig
) -> tuple[torch.Tensor, torch.Tensor]:
    """Predicted (x2, R2) from the two observed poses via the position-only step."""
    forces0 = model.forces(batch.x0, batch.R0, batch.u0)
    forces1 = model.forces(batch.x1, batch.R1, batch.u1)
    return position_only_update(batch.x0, batch.R0, batch.x1, batch.R1, forces0, forces1, model, p, cfg)


def predict_IIb_position(batch: TransitionP, model: "DynamicsModel", p: IntegratorParams) -> torch.Tensor:
    forces0 = model.forces(batch.x0, batch.R0, batch.u0)
    forces1 = model.forces(batch.x1, batch.R1, batch.u1)
    dU_dx = model.potential(batch.x1, batch.R1).dU_dx
    return next_position(batch.x0, batch.x1, batch.R1, dU_dx, model.mass(batch.x1, batch.R1), forces0, forces1, p.h)
