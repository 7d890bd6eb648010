from __future__ import annotations

import torch

from fvin.integrator.models import SE3State, SO3State

from .models import CostSpec, PendulumSwingup, QuadrotorTrack


def _sq(v: torch.Tensor) -> torch.Tensor:
    return (v * v).sum(-1)


def _trace_gap(A: torch.Tensor) -> torch.Tensor:
    # tr(I - A)
    return 3.0 - A.diagonal(dim1=-2, dim2=-1).sum(-1)


def stage_cost_tensors(
    spec: CostSpec,
    x: torch.Tensor,
    R: torch.Tensor,
    v: torch.Tensor,
    omega: torch.Tensor,
    u: torch.Tensor,
    t: float = 0.0,
) -> torch.Tensor:
    if isinstance(spec, PendulumSwingup):
        attitude = _trace_gap(spec.goal.transpose(-1, -2) @ R)
        return spec.w_attitude * attitude + spec.w_omega * _sq(omega) + spec.w_u * _sq(u)
    if isinstance(spec, QuadrotorTrack):
        x_ref, v_ref = spec.reference(t)
        return (
            spec.w_x * _sq(x - x_ref)
            + spec.w_attitude * _trace_gap(R)
            + spec.w_v * _sq(v - v_ref)
            + spec.w_omega * _sq(omega)
            + spec.w_u * _sq(u)
        )
    raise TypeError(f"Unknown cost spec: {type(spec).__name__}")


def stage_cost(spec: CostSpec, state: SE3State | SO3State, u: torch.Tensor, t: float = 0.0) -> torch.Tensor:
    """C(s, u) at time t; the terminal cost uses the same expression."""
    if isinstance(state, SE3State):
        return stage_cost_tensors(spec, state.x, state.R, state.v, state.omega, u, t)
    zeros = torch.zeros_like(state.omega)
    return stage_cost_tensors(spec, zeros, state.R, zeros, state.omega, u, t)


def attitude_gap(spec: CostSpec, R: torch.Tensor) -> torch.Tensor:
    """tr(I - R*^T R) for swing-up, tr(I - R) for tracking."""
    if isinstance(spec, PendulumSwingup):
        return _trace_gap(spec.goal.transpose(-1, -2) @ R)
    return _trace_gap(R)
