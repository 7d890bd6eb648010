from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal

import torch

from fvin.common.errors import ConfigError, DimMismatch
from fvin.liegroup import SE3Pose, check_rotation

NewtonMode = Literal["tol", "unroll"]


@dataclass(frozen=True, slots=True)
class IntegratorParams:
    h: float
    alpha: float = 0.5

    def __post_init__(self) -> None:
        if not math.isfinite(self.h) or self.h <= 0:
            raise ConfigError(f"time step h must be positive, got {self.h}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")


@dataclass(frozen=True, slots=True)
class NewtonConfig:
    """Attitude solve settings.

    ``mode="tol"`` iterates until the residual drops below ``tol`` (never fewer
    than ``unroll_for_grad`` iterations) and raises if ``max_iters`` is
    exhausted. ``mode="unroll"`` runs exactly ``unroll_for_grad`` iterations and
    never raises; training and MPC differentiate through that fixed unroll.
    """

    max_iters: int = 10
    tol: float = 1e-12
    unroll_for_grad: int = 3
    mode: NewtonMode = "tol"

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.unroll_for_grad < 1:
            raise ConfigError(f"unroll_for_grad must be >= 1, got {self.unroll_for_grad}")
        if self.mode not in ("tol", "unroll"):
            raise ConfigError(f"unknown Newton mode: {self.mode}")

    def unrolled(self) -> "NewtonConfig":
        return replace(self, mode="unroll")


def _check_vec3(name: str, value: torch.Tensor) -> None:
    if value.shape[-1:] != (3,):
        raise DimMismatch(f"{name} must have trailing dimension 3, got {tuple(value.shape)}")


@dataclass(frozen=True, slots=True)
class SE3State:
    """Pose (x, R) with world-frame linear velocity v and body angular velocity omega."""

    x: torch.Tensor
    R: torch.Tensor
    v: torch.Tensor
    omega: torch.Tensor

    def __post_init__(self) -> None:
        for name in ("x", "v", "omega"):
            _check_vec3(name, getattr(self, name))
        check_rotation(self.R)

    @property
    def pose(self) -> SE3Pose:
        return SE3Pose(self.x, self.R)

    @property
    def batch_shape(self) -> torch.Size:
        return self.R.shape[:-2]

    def detach(self) -> "SE3State":
        return SE3State(self.x.detach(), self.R.detach(), self.v.detach(), self.omega.detach())

    def is_finite(self) -> bool:
        return all(bool(torch.isfinite(t).all()) for t in (self.x, self.R, self.v, self.omega))

    def as_vector(self) -> torch.Tensor:
        """Flat (x, R row-major, v, omega) layout of the closed-loop CSV."""
        return torch.cat((self.x, self.R.flatten(-2), self.v, self.omega), dim=-1)


@dataclass(frozen=True, slots=True)
class SO3State:
    R: torch.Tensor
    omega: torch.Tensor

    def __post_init__(self) -> None:
        _check_vec3("omega", self.omega)
        check_rotation(self.R)

    @property
    def batch_shape(self) -> torch.Size:
        return self.R.shape[:-2]

    def detach(self) -> "SO3State":
        return SO3State(self.R.detach(), self.omega.detach())

    def is_finite(self) -> bool:
        return bool(torch.isfinite(self.R).all()) and bool(torch.isfinite(self.omega).all())

    def as_vector(self) -> torch.Tensor:
        return torch.cat((self.R.flatten(-2), self.omega), dim=-1)

    def to_se3(self) -> SE3State:
        zeros = torch.zeros_like(self.omega)
        return SE3State(zeros, self.R, zeros, self.omega)


@dataclass(frozen=True, slots=True)
class DiscreteForces:
    """Left (minus) and right (plus) discrete forces; R components are body-frame torques."""

    fR_minus: torch.Tensor
    fR_plus: torch.Tensor
    fx_minus: torch.Tensor
    fx_plus: torch.Tensor

    @classmethod
    def zeros(cls, batch_shape: tuple[int, ...] | torch.Size = (), *, dtype: torch.dtype = torch.float64) -> "DiscreteForces":
        z = torch.zeros(*batch_shape, 3, dtype=dtype)
        return cls(z, z, z, z)
