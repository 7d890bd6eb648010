"""Black-box comparison: a plain MLP regressing (q1, qdot1) from (q0, qdot0, u0).

It has no notion of SO(3), so its rollouts drift off the rotation manifold and
its energy is not controlled; the diagnostics quantify both.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Sequence

import torch

from fvin.common.config import ForceConvention
from fvin.common.errors import NonFiniteLoss
from fvin.diffengine import AdamState, ParamTape, adam_step, value_and_grad
from fvin.dynmodel.mlp import MLPSpec, mlp_forward
from fvin.liegroup import orthogonality_error
from fvin.logging import get_logger

from .models import TransitionPV

if TYPE_CHECKING:
    from fvin.dynmodel.base import DynamicsModel

logger = get_logger(__name__)


def _state_columns(convention: ForceConvention, x, R, v, omega) -> torch.Tensor:
    if convention.translational:
        return torch.cat((x, R.flatten(-2), v, omega), dim=-1)
    return torch.cat((R.flatten(-2), omega), dim=-1)


def _split_state(convention: ForceConvention, s: torch.Tensor):
    if convention.translational:
        return s[..., 0:3], s[..., 3:12].unflatten(-1, (3, 3)), s[..., 12:15], s[..., 15:18]
    zeros = torch.zeros(*s.shape[:-1], 3, dtype=s.dtype)
    return zeros, s[..., 0:9].unflatten(-1, (3, 3)), zeros, s[..., 9:12]


@dataclass(frozen=True)
class BlackBoxModel:
    convention: ForceConvention
    spec: MLPSpec
    params: torch.Tensor

    @classmethod
    def initialize(cls, convention: ForceConvention, hidden: Sequence[int], seed: int) -> "BlackBoxModel":
        state_dim = 18 if convention.translational else 12
        spec = MLPSpec((state_dim + convention.u_dim, *hidden, state_dim))
        return cls(convention, spec, spec.initial_params(torch.Generator().manual_seed(seed)))

    @property
    def state_dim(self) -> int:
        return self.spec.out_dim

    def predict(self, state: torch.Tensor, u: torch.Tensor, params: Optional[torch.Tensor] = None) -> torch.Tensor:
        theta = self.params if params is None else params
        return mlp_forward(self.spec, theta, torch.cat((state, u), dim=-1))

    def rollout(self, state0: torch.Tensor, controls: torch.Tensor) -> torch.Tensor:
        """Raw state vectors (no rotation validation), shape (len(controls) + 1, state_dim)."""
        states = [state0]
        with torch.no_grad():
            for u in controls:
                states.append(self.predict(states[-1], u))
        return torch.stack(states)


@dataclass
class BaselineDiagnostics:
    final_loss: float
    max_orthogonality_error: float
    energy: Optional[torch.Tensor] = None
    history: list[tuple[int, float]] = field(default_factory=list)


def raw_energy(model: "DynamicsModel", x, R, v, omega) -> torch.Tensor:
    """Energy of possibly non-orthogonal states, evaluated with ``model``'s m, J and U."""
    J = model.inertia(x, R)
    energy = 0.5 * (omega * (J @ omega[..., None]).squeeze(-1)).sum(-1) + model.potential(x, R).U
    if model.convention.translational:
        energy = energy + 0.5 * model.mass(x, R) * (v * v).sum(-1)
    return energy


def train_blackbox_baseline(
    dataset: TransitionPV,
    convention: ForceConvention,
    *,
    hidden: Sequence[int] = (64, 64, 64),
    iterations: int = 2000,
    lr: float = 1e-3,
    seed: int = 0,
    log_every: int = 10,
    rollout_steps: int = 2000,
    energy_model: Optional["DynamicsModel"] = None,
) -> tuple[BlackBoxModel, BaselineDiagnostics]:
    model = BlackBoxModel.initialize(convention, hidden, seed)
    inputs = _state_columns(convention, dataset.x0, dataset.R0, dataset.v0, dataset.omega0)
    targets = _state_columns(convention, dataset.x1, dataset.R1, dataset.v1, dataset.omega1)

    def loss_fn(theta: torch.Tensor) -> torch.Tensor:
        diff = model.predict(inputs, dataset.u0, theta) - targets
        return (diff * diff).sum()

    tape = ParamTape(model.params)
    adam = AdamState(tape, lr)
    history: list[tuple[int, float]] = []
    last_finite: Optional[float] = None
    for it in range(iterations):
        tape.zero_grad()
        value, _ = value_and_grad(loss_fn, tape)
        if not math.isfinite(value):
            raise NonFiniteLoss(it, last_finite)
        last_finite = value
        if it % log_every == 0:
            history.append((it, value))
            logger.debug("baseline iter %6d  loss %.6e", it, value)
        adam_step(adam, tape)

    trained = BlackBoxModel(convention, model.spec, tape.params)
    with torch.no_grad():
        final = float(loss_fn(tape.params))
    history.append((iterations, final))

    controls = torch.zeros(rollout_steps, convention.u_dim, dtype=torch.float64)
    traj = trained.rollout(inputs[0], controls)
    x, R, v, omega = _split_state(convention, traj)
    max_orth = float(orthogonality_error(R).max())
    energy = raw_energy(energy_model, x, R, v, omega) if energy_model is not None else None
    if not math.isfinite(max_orth):
        max_orth = math.inf
    logger.info("Baseline: loss %.3e, rollout orthogonality error %.3e", final, max_orth)
    return trained, BaselineDiagnostics(final, max_orth, energy, history)
