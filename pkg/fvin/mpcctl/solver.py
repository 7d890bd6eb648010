"""Projected-gradient shooting over the learnt flow map.

Controls are optimized in range-normalized coordinates (each bounded channel
mapped onto [0, 1]) with Adam-style steps. A step that raises the cost is
rejected: the step size halves and the moments restart. The box projection is
the last operation applied to every candidate.
"""
from __future__ import annotations

import math
from typing import TYPE_CHECKING, Optional

import torch

from fvin.common.errors import NonFiniteCost, NumericalFailure
from fvin.diffengine import AdamState, ParamTape, value_and_grad
from fvin.integrator.models import SE3State, SO3State
from fvin.integrator.step import se3_update, so3_update
from fvin.logging import get_logger

from .costs import stage_cost_tensors
from .models import ControlPlan, MPCProblem, finite_scale

if TYPE_CHECKING:
    from fvin.dynmodel.base import DynamicsModel

logger = get_logger(__name__)


def plan_cost(
    state: SE3State | SO3State,
    controls: torch.Tensor,
    model: "DynamicsModel",
    prob: MPCProblem,
    t0: float = 0.0,
) -> torch.Tensor:
    """sum_{k=1..N} C(s_k, u_{k-1}, t_k) + Phi(s_N, u_{N-1}) with Phi = C."""
    h = prob.integrator.h
    if isinstance(state, SE3State):
        x, R, v, omega = state.x, state.R, state.v, state.omega
    else:
        R, omega = state.R, state.omega
        x = v = torch.zeros_like(omega)

    total = torch.zeros((), dtype=torch.float64)
    stage = total
    for k in range(controls.shape[0]):
        u = controls[k]
        forces = model.forces(x, R, u)
        if isinstance(state, SE3State):
            x, R, v, omega = se3_update(x, R, v, omega, forces, model, prob.integrator, prob.newton)
        else:
            R, omega = so3_update(R, omega, forces, model, prob.integrator, prob.newton)
        stage = stage_cost_tensors(prob.cost, x, R, v, omega, u, t0 + (k + 1) * h)
        total = total + stage
    return total + stage


def _projected_gradient(w: torch.Tensor, g: torch.Tensor, bounded: torch.Tensor) -> torch.Tensor:
    at_lo = bounded & (w <= 0.0) & (g > 0)
    at_hi = bounded & (w >= 1.0) & (g < 0)
    return torch.where(at_lo | at_hi, torch.zeros_like(g), g)


def solve_mpc(
    state: SE3State | SO3State,
    model: "DynamicsModel",
    prob: MPCProblem,
    *,
    init: Optional[torch.Tensor] = None,
    t0: float = 0.0,
) -> ControlPlan:
    """Minimize ``plan_cost`` over box-bounded control sequences of length ``prob.horizon``.

    Returns the best plan found; its cost never exceeds the cost of ``init``.
    """
    N, m = prob.horizon, prob.u_dim
    offset, scale = finite_scale(prob.lo, prob.hi)
    bounded = (torch.isfinite(prob.lo) & torch.isfinite(prob.hi) & (prob.hi > prob.lo)).expand(N, m).reshape(-1)

    if init is None:
        init = torch.zeros(N, m, dtype=torch.float64)
    u0 = prob.clamp(init.detach().to(torch.float64).reshape(N, m))

    def to_controls(w: torch.Tensor) -> torch.Tensor:
        return prob.clamp(offset + scale * w.reshape(N, m))

    def cost_fn(w: torch.Tensor) -> torch.Tensor:
        return plan_cost(state, to_controls(w), model, prob, t0)

    def evaluate(tape: ParamTape) -> tuple[float, torch.Tensor]:
        tape.zero_grad()
        try:
            return value_and_grad(cost_fn, tape)
        except NumericalFailure as exc:
            logger.debug("Candidate plan failed: %s", exc)
            return math.nan, torch.zeros_like(tape.params)

    tape = ParamTape(((u0 - offset) / scale).reshape(-1))
    cost, g = evaluate(tape)
    if not math.isfinite(cost):
        raise NonFiniteCost(f"initial plan cost is not finite ({cost})")

    cfg = prob.solver
    lr = cfg.lr
    adam = AdamState(tape, lr)
    iterations = 0
    for _ in range(cfg.iterations):
        pg = _projected_gradient(tape.params, g, bounded)
        if float(pg.abs().max()) <= cfg.grad_tol:
            break
        iterations += 1
        accepted_w = tape.params.clone()
        tape.grads = g
        adam.step(tape)
        candidate = tape.params
        candidate = torch.where(bounded, candidate.clamp(0.0, 1.0), candidate)
        tape.params = candidate
        new_cost, new_g = evaluate(tape)
        if math.isfinite(new_cost) and new_cost <= cost:
            cost, g = new_cost, new_g
            continue
        tape.params = accepted_w
        lr *= 0.5
        if lr < cfg.min_lr:
            break
        adam.reset(lr)

    controls = to_controls(tape.params).detach()
    logger.debug("MPC solve: cost %.6e after %d iterations", cost, iterations)
    return ControlPlan(controls=controls, cost=cost, iterations=iterations)
