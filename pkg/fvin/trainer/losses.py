from __future__ import annotations

import math
from typing import TYPE_CHECKING, Callable

import torch

from fvin.common.errors import SchemaError
from fvin.integrator.diagnostics import euler_lagrange_defects
from fvin.integrator.models import IntegratorParams, NewtonConfig
from fvin.liegroup import log_so3, rotation_angle

from .models import Dataset, TransitionP, TransitionPV
from .predict import predict_Ia, predict_Ib, predict_IIa, predict_IIb_position

if TYPE_CHECKING:
    from fvin.dynmodel.base import DynamicsModel

DEFAULT_ANGLE_CUTOFF = math.pi - 0.05


def _sq(v: torch.Tensor) -> torch.Tensor:
    return (v * v).sum(-1)


def attitude_error(R_pred: torch.Tensor, R_obs: torch.Tensor, angle_cutoff: float = DEFAULT_ANGLE_CUTOFF) -> torch.Tensor:
    """Per-sample |log(R_pred R_obs^T)|^2, zero where the relative angle exceeds ``angle_cutoff``."""
    rel = R_pred @ R_obs.transpose(-1, -2)
    far = rotation_angle(rel.detach()) > angle_cutoff
    eye = torch.eye(3, dtype=rel.dtype).expand_as(rel)
    rel = torch.where(far[..., None, None], eye, rel)
    return _sq(log_so3(rel))


def loss_Ia(
    batch: TransitionPV,
    model: "DynamicsModel",
    p: IntegratorParams,
    cfg: NewtonConfig,
    angle_cutoff: float = DEFAULT_ANGLE_CUTOFF,
) -> torch.Tensor:
    pred = predict_Ia(batch, model, p, cfg)
    terms = attitude_error(pred.R1, batch.R1, angle_cutoff) + _sq(batch.omega1 - pred.omega1)
    if model.convention.translational:
        terms = terms + _sq(batch.x1 - pred.x1) + _sq(batch.v1 - pred.v1)
    return terms.sum()


def loss_Ib(
    batch: TransitionPV,
    model: "DynamicsModel",
    p: IntegratorParams,
    cfg: NewtonConfig | None = None,
    angle_cutoff: float = DEFAULT_ANGLE_CUTOFF,
) -> torch.Tensor:
    pred = predict_Ib(batch, model, p)
    penalty = (pred.attitude_defect * pred.attitude_defect).sum((-2, -1))
    terms = penalty + _sq(batch.omega1 - pred.omega1)
    if model.convention.translational:
        terms = terms + _sq(batch.x1 - pred.x1) + _sq(batch.v1 - pred.v1)
    return terms.sum()


def loss_IIa(
    batch: TransitionP,
    model: "DynamicsModel",
    p: IntegratorParams,
    cfg: NewtonConfig,
    angle_cutoff: float = DEFAULT_ANGLE_CUTOFF,
) -> torch.Tensor:
    x2, R2 = predict_IIa(batch, model, p, cfg)
    terms = attitude_error(R2, batch.R2, angle_cutoff)
    if model.convention.translational:
        terms = terms + _sq(batch.x2 - x2)
    return terms.sum()


def loss_IIb(
    batch: TransitionP,
    model: "DynamicsModel",
    p: IntegratorParams,
    cfg: NewtonConfig | None = None,
    angle_cutoff: float = DEFAULT_ANGLE_CUTOFF,
) -> torch.Tensor:
    forces0 = model.forces(batch.x0, batch.R0, batch.u0)
    forces1 = model.forces(batch.x1, batch.R1, batch.u1)
    rot, _ = euler_lagrange_defects(
        batch.x0, batch.R0, batch.x1, batch.R1, batch.x2, batch.R2, forces0, forces1, model, p
    )
    terms = (rot * rot).sum((-2, -1))
    if model.convention.translational:
        terms = terms + _sq(batch.x2 - predict_IIb_position(batch, model, p))
    return terms.sum()


LossFunction = Callable[..., torch.Tensor]

LOSSES: dict[str, LossFunction] = {
    "Ia": loss_Ia,
    "Ib": loss_Ib,
    "IIa": loss_IIa,
    "IIb": loss_IIb,
}


def loss_for(algorithm: str, dataset: Dataset) -> LossFunction:
    if algorithm not in LOSSES:
        raise SchemaError(f"Unknown algorithm: {algorithm}")
    expected = TransitionP if algorithm.startswith("II") else TransitionPV
    if not isinstance(dataset, expected):
        raise SchemaError(f"Algorithm {algorithm} needs {expected.__name__} data, got {type(dataset).__name__}")
    return LOSSES[algorithm]
