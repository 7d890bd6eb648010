from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Optional, Protocol

import torch

from fvin.common.config import ForceConvention
from fvin.common.errors import ConfigError, FvinError, RolloutError
from fvin.common.serialize import write_csv
from fvin.integrator.models import SE3State, SO3State
from fvin.logging import get_logger

from .costs import attitude_gap, stage_cost
from .models import ControlPlan, CostSpec, MPCProblem, QuadrotorTrack
from .solver import solve_mpc

if TYPE_CHECKING:
    from fvin.dynmodel.base import DynamicsModel

logger = get_logger(__name__)


class Environment(Protocol):
    h: float
    convention: ForceConvention

    @property
    def state(self) -> SE3State | SO3State: ...

    def step(self, u: torch.Tensor) -> SE3State | SO3State: ...


@dataclass
class ClosedLoopLog:
    h: float
    states: list[SE3State | SO3State] = field(default_factory=list)
    controls: list[torch.Tensor] = field(default_factory=list)
    costs: list[float] = field(default_factory=list)
    solver_iterations: list[int] = field(default_factory=list)


def run_closed_loop(
    env: Environment,
    model: "DynamicsModel",
    prob: MPCProblem,
    steps: int,
    apply_count: int = 1,
    *,
    init_control: Optional[torch.Tensor] = None,
) -> ClosedLoopLog:
    """Receding-horizon loop: plan from the measured state, apply the first
    ``apply_count`` controls to the true system, re-plan warm-started from the
    previous plan shifted by the same amount.
    """
    if abs(env.h - prob.integrator.h) > 1e-12:
        raise ConfigError(f"environment step {env.h} differs from model step {prob.integrator.h}")
    if apply_count < 1 or apply_count > prob.horizon:
        raise ConfigError(f"apply_count must lie in [1, {prob.horizon}], got {apply_count}")

    if init_control is None:
        init_control = torch.zeros(prob.u_dim, dtype=torch.float64)
    warm = init_control.to(torch.float64).reshape(1, -1).expand(prob.horizon, -1).clone()

    log = ClosedLoopLog(h=env.h, states=[env.state])
    plan: Optional[ControlPlan] = None
    for k in range(steps):
        t = k * env.h
        state = env.state
        try:
            if k % apply_count == 0:
                plan = solve_mpc(state, model, prob, init=warm, t0=t)
                warm = plan.shifted(apply_count) if prob.solver.warm_start else warm
                log.solver_iterations.append(plan.iterations)
            u = plan.controls[k % apply_count]
            cost = float(stage_cost(prob.cost, state, u, t))
            new_state = env.step(u)
        except FvinError as exc:
            logger.error("Closed loop failed at step %d: %s", k, exc)
            raise RolloutError(k, exc) from exc
        log.controls.append(u)
        log.costs.append(cost)
        log.states.append(new_state)
        logger.debug("step %4d  cost %.4e  plan cost %.4e", k, cost, plan.cost)
    logger.info("Closed loop finished: %d steps, final stage cost %.4e", steps, log.costs[-1] if log.costs else float("nan"))
    return log


def write_closed_loop_csv(path: str | Path, log: ClosedLoopLog) -> Path:
    """One row per applied control: time, state before the control, control, stage cost."""
    if not log.states:
        raise ConfigError("empty closed-loop log")
    translational = isinstance(log.states[0], SE3State)
    header = ["t[s]"]
    if translational:
        header += [f"x{i}[m]" for i in range(3)]
    header += [f"R{i}{j}[-]" for i in range(3) for j in range(3)]
    if translational:
        header += [f"v{i}[m/s]" for i in range(3)]
    header += [f"omega{i}[rad/s]" for i in range(3)]
    u_dim = log.controls[0].numel() if log.controls else 0
    header += [f"u{i}[-]" for i in range(u_dim)]
    header += ["stage_cost[-]"]
    rows = (
        (k * log.h, *log.states[k].as_vector().tolist(), *u.tolist(), cost)
        for k, (u, cost) in enumerate(zip(log.controls, log.costs))
    )
    return write_csv(path, header, rows)


@dataclass(frozen=True, slots=True)
class ClosedLoopSummary:
    """Final and worst-over-window errors of a closed-loop run."""

    steps: int
    final_attitude_error: float
    final_rate: float
    window_attitude_error: float
    window_rate: float
    final_position_error: Optional[float] = None
    window_position_error: Optional[float] = None

    def lines(self) -> list[str]:
        out = [
            f"steps: {self.steps}",
            f"final attitude error: {self.final_attitude_error:.4e}",
            f"final angular rate: {self.final_rate:.4e} rad/s",
            f"max attitude error (window): {self.window_attitude_error:.4e}",
            f"max angular rate (window): {self.window_rate:.4e} rad/s",
        ]
        if self.final_position_error is not None:
            out += [
                f"final position error: {self.final_position_error:.4e} m",
                f"max position error (window): {self.window_position_error:.4e} m",
            ]
        return out


def summarize_closed_loop(log: ClosedLoopLog, cost: CostSpec, window: int = 100) -> ClosedLoopSummary:
    """Errors against the task goal; the window covers the last ``window`` states."""
    states = log.states
    tail = states[-min(window, len(states)):]
    att = [float(attitude_gap(cost, s.R)) for s in tail]
    rate = [float(torch.linalg.vector_norm(s.omega)) for s in tail]
    pos: list[float] = []
    if isinstance(cost, QuadrotorTrack):
        offset = len(states) - len(tail)
        for i, s in enumerate(tail):
            x_ref, _ = cost.reference((offset + i) * log.h)
            pos.append(float(torch.linalg.vector_norm(s.x - x_ref)))
    return ClosedLoopSummary(
        steps=len(log.controls),
        final_attitude_error=att[-1],
        final_rate=rate[-1],
        window_attitude_error=max(att),
        window_rate=max(rate),
        final_position_error=pos[-1] if pos else None,
        window_position_error=max(pos) if pos else None,
    )
