from __future__ import annotations

from dataclasses import dataclass

import torch

from fvin.common.errors import NewtonDiverged
from fvin.liegroup import cayley, hat
from fvin.logging import get_logger

from .models import NewtonConfig

logger = get_logger(__name__)


@dataclass(frozen=True, slots=True)
class AttitudeSolution:
    z: torch.Tensor
    Z: torch.Tensor
    iterations: int
    residual: float


def nonstandard_inertia(J: torch.Tensor) -> torch.Tensor:
    """J_d = tr(J)/2 I - J."""
    tr = J.diagonal(dim1=-2, dim2=-1).sum(-1)
    eye = torch.eye(3, dtype=J.dtype, device=J.device)
    return 0.5 * tr[..., None, None] * eye - J


def attitude_residual(a: torch.Tensor, z: torch.Tensor, J: torch.Tensor) -> torch.Tensor:
    """phi(z) = a + a x z + z (a.z) - 2 J z; its root gives Z = Cay(z)."""
    az = (a * z).sum(-1, keepdim=True)
    return a + torch.linalg.cross(a, z, dim=-1) + z * az - 2.0 * (J @ z[..., None]).squeeze(-1)


def attitude_jacobian(a: torch.Tensor, z: torch.Tensor, J: torch.Tensor) -> torch.Tensor:
    az = (a * z).sum(-1)
    eye = torch.eye(3, dtype=a.dtype, device=a.device)
    return hat(a) + az[..., None, None] * eye + z[..., :, None] * a[..., None, :] - 2.0 * J


def solve_attitude(a: torch.Tensor, J: torch.Tensor, cfg: NewtonConfig | None = None) -> AttitudeSolution:
    """Solve hat(a) = Z J_d - J_d Z^T for Z = Cay(z) by Newton's method on phi.

    Starts from the linearization z0 = (2J)^-1 a. Differentiable in every mode.
    """
    cfg = cfg or NewtonConfig()
    a, J = torch.broadcast_tensors(a[..., None], J)
    a = a[..., 0]
    z = torch.linalg.solve(2.0 * J, a[..., None]).squeeze(-1)

    iterations = 0
    if cfg.mode == "unroll":
        for _ in range(cfg.unroll_for_grad):
            z = _newton_update(a, z, J)
        iterations = cfg.unroll_for_grad
        residual = _max_norm(attitude_residual(a, z, J))
    else:
        residual = _max_norm(attitude_residual(a, z, J))
        while iterations < cfg.max_iters and (iterations < cfg.unroll_for_grad or residual > cfg.tol):
            z = _newton_update(a, z, J)
            iterations += 1
            residual = _max_norm(attitude_residual(a, z, J))
        if not residual <= cfg.tol:
            logger.debug("Newton residual %.3e after %d iterations", residual, iterations)
            raise NewtonDiverged(residual, iterations)

    return AttitudeSolution(z=z, Z=cayley(z), iterations=iterations, residual=residual)


def _newton_update(a: torch.Tensor, z: torch.Tensor, J: torch.Tensor) -> torch.Tensor:
    step = torch.linalg.solve(attitude_jacobian(a, z, J), attitude_residual(a, z, J)[..., None])
    return z - step.squeeze(-1)


def _max_norm(r: torch.Tensor) -> float:
    if r.numel() == 0:
        return 0.0
    # nan compares false against tol, so it surfaces as divergence
    return float(torch.linalg.vector_norm(r.detach(), dim=-1).max())


def matrix_residual(a: torch.Tensor, Z: torch.Tensor, J: torch.Tensor) -> torch.Tensor:
    """hat(a) - (Z J_d - J_d Z^T); zero exactly when Z solves the attitude equation."""
    Jd = nonstandard_inertia(J)
    return hat(a) - (Z @ Jd - Jd @ Z.transpose(-1, -2))
