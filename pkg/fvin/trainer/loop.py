from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import torch

from fvin.common.errors import NonFiniteLoss, SchemaError
from fvin.common.serialize import write_csv
from fvin.diffengine import AdamState, ParamTape, adam_step, value_and_grad
from fvin.dynmodel.network import NetworkModel
from fvin.logging import get_logger

from .losses import loss_for
from .models import Dataset, TrainConfig

logger = get_logger(__name__)


@dataclass
class TrainResult:
    model: NetworkModel
    history: list[tuple[int, float]] = field(default_factory=list)

    @property
    def final_loss(self) -> float:
        return self.history[-1][1] if self.history else math.nan


def make_loss_fn(dataset: Dataset, model: NetworkModel, cfg: TrainConfig):
    """Loss as a function of the flat parameter vector."""
    loss = loss_for(cfg.algorithm, dataset)
    p = cfg.integrator

    def loss_fn(theta: torch.Tensor) -> torch.Tensor:
        return loss(dataset, model.with_params(theta), p, cfg.newton, cfg.angle_cutoff)

    return loss_fn


def train(dataset: Dataset, model: NetworkModel, cfg: TrainConfig) -> TrainResult:
    """Full-batch Adam on the configured loss.

    The loss is recorded before the update at every ``log_every``-th iteration
    (starting at 0) and once more after the final update.
    """
    if dataset.u_dim != model.convention.u_dim:
        raise SchemaError(
            f"dataset controls have dimension {dataset.u_dim}, model {model.convention.value} expects {model.convention.u_dim}"
        )
    loss_fn = make_loss_fn(dataset, model, cfg)
    tape = ParamTape(model.params)
    adam = AdamState(tape, cfg.lr, half_life=cfg.lr_half_life)
    history: list[tuple[int, float]] = []
    last_finite: Optional[float] = None

    logger.info(
        "Training %s on %d transitions: %d iterations, lr %.1e",
        cfg.algorithm,
        len(dataset),
        cfg.iterations,
        cfg.lr,
    )
    for it in range(cfg.iterations):
        tape.zero_grad()
        value, g = value_and_grad(loss_fn, tape)
        if not math.isfinite(value) or not bool(torch.isfinite(g).all()):
            logger.error("Non-finite loss at iteration %d (last finite %s)", it, last_finite)
            raise NonFiniteLoss(it, last_finite)
        last_finite = value
        if it % cfg.log_every == 0:
            history.append((it, value))
            logger.info("iter %6d  loss %.6e  lr %.2e", it, value, adam.lr)
        adam_step(adam, tape)

    with torch.no_grad():
        final = float(loss_fn(tape.params))
    if not math.isfinite(final):
        raise NonFiniteLoss(cfg.iterations, last_finite)
    if not history or history[-1][0] != cfg.iterations:
        history.append((cfg.iterations, final))
    logger.info("Finished training: loss %.6e", final)
    return TrainResult(model=model.with_params(tape.params), history=history)


def write_loss_history(path: str | Path, history: list[tuple[int, float]]) -> Path:
    return write_csv(path, ["iteration[-]", "loss[-]"], ((it, float(value)) for it, value in history))
