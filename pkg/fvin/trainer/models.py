from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Literal, Optional

import torch

from fvin.common.config import POSITION_ONLY_ALGORITHMS, POSITION_VELOCITY_ALGORITHMS, Algorithm
from fvin.common.errors import ConfigError, DimMismatch
from fvin.integrator.models import IntegratorParams, NewtonConfig
from fvin.liegroup import check_rotation

_VECTOR_FIELDS = {"x0", "v0", "omega0", "x1", "v1", "omega1", "x2"}
_ROTATION_FIELDS = {"R0", "R1", "R2"}


def _validate_batch(obj: object) -> int:
    n: Optional[int] = None
    for f in fields(obj):
        value: torch.Tensor = getattr(obj, f.name)
        if value.ndim < 2:
            raise DimMismatch(f"{f.name} must be batched, got shape {tuple(value.shape)}")
        if n is None:
            n = value.shape[0]
        elif value.shape[0] != n:
            raise DimMismatch(f"{f.name} has {value.shape[0]} rows, expected {n}")
        if f.name in _VECTOR_FIELDS and value.shape[1:] != (3,):
            raise DimMismatch(f"{f.name} must have shape (N, 3), got {tuple(value.shape)}")
        if f.name in _ROTATION_FIELDS:
            check_rotation(value)
        if not bool(torch.isfinite(value).all()):
            raise DimMismatch(f"{f.name} contains non-finite values")
    return n or 0


@dataclass(frozen=True, slots=True)
class TransitionPV:
    """Batch of position-velocity updates (q0, qdot0, u0) -> (q1, qdot1); row i is one transition."""

    x0: torch.Tensor
    R0: torch.Tensor
    v0: torch.Tensor
    omega0: torch.Tensor
    u0: torch.Tensor
    x1: torch.Tensor
    R1: torch.Tensor
    v1: torch.Tensor
    omega1: torch.Tensor

    def __post_init__(self) -> None:
        _validate_batch(self)

    def __len__(self) -> int:
        return self.R0.shape[0]

    @property
    def u_dim(self) -> int:
        return self.u0.shape[-1]

    def select(self, index: torch.Tensor | slice) -> "TransitionPV":
        return TransitionPV(**{f.name: getattr(self, f.name)[index] for f in fields(self)})

    @classmethod
    def concat(cls, parts: list["TransitionPV"]) -> "TransitionPV":
        return cls(**{f.name: torch.cat([getattr(p, f.name) for p in parts]) for f in fields(cls)})


@dataclass(frozen=True, slots=True)
class TransitionP:
    """Batch of position-only triples (q0, q1, q2) with the controls u0, u1 applied at q0 and q1."""

    x0: torch.Tensor
    R0: torch.Tensor
    x1: torch.Tensor
    R1: torch.Tensor
    x2: torch.Tensor
    R2: torch.Tensor
    u0: torch.Tensor
    u1: torch.Tensor

    def __post_init__(self) -> None:
        _validate_batch(self)

    def __len__(self) -> int:
        return self.R0.shape[0]

    @property
    def u_dim(self) -> int:
        return self.u0.shape[-1]

    def select(self, index: torch.Tensor | slice) -> "TransitionP":
        return TransitionP(**{f.name: getattr(self, f.name)[index] for f in fields(self)})

    @classmethod
    def concat(cls, parts: list["TransitionP"]) -> "TransitionP":
        return cls(**{f.name: torch.cat([getattr(p, f.name) for p in parts]) for f in fields(cls)})


Dataset = TransitionPV | TransitionP


@dataclass(frozen=True, slots=True)
class TrainConfig:
    algorithm: Algorithm = "Ia"
    alpha: float = 0.5
    h: float = 0.02
    iterations: int = 2000
    lr: float = 1e-3
    lr_half_life: Optional[int] = None
    batch_mode: Literal["full"] = "full"
    seed: int = 0
    log_every: int = 10
    # relative rotations beyond this angle drop out of the log-map term
    angle_cutoff: float = math.pi - 0.05
    newton: NewtonConfig = field(default_factory=lambda: NewtonConfig(mode="unroll"))

    def __post_init__(self) -> None:
        if self.algorithm not in POSITION_VELOCITY_ALGORITHMS | POSITION_ONLY_ALGORITHMS:
            raise ConfigError(f"Unknown algorithm: {self.algorithm}")
        if self.iterations < 0:
            raise ConfigError(f"iterations must be >= 0, got {self.iterations}")
        if not self.lr > 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.lr_half_life is not None and self.lr_half_life <= 0:
            raise ConfigError(f"lr_half_life must be positive, got {self.lr_half_life}")
        if self.batch_mode != "full":
            raise ConfigError(f"Unsupported batch mode: {self.batch_mode}")
        if self.log_every < 1:
            raise ConfigError(f"log_every must be >= 1, got {self.log_every}")
        IntegratorParams(self.h, self.alpha)

    @property
    def integrator(self) -> IntegratorParams:
        return IntegratorParams(self.h, self.alpha)

    @property
    def position_only(self) -> bool:
        return self.algorithm in POSITION_ONLY_ALGORITHMS
