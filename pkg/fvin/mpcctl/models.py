from __future__ import annotations

from dataclasses import dataclass, field

import torch

from fvin.common.errors import ConfigError
from fvin.integrator.models import IntegratorParams, NewtonConfig

from .reference import HoverReference, Reference


def upright_goal() -> torch.Tensor:
    """Rotation by pi about e3: the inverted pendulum."""
    return torch.diag(torch.tensor([-1.0, -1.0, 1.0], dtype=torch.float64))


@dataclass(frozen=True, slots=True)
class PendulumSwingup:
    goal: torch.Tensor = field(default_factory=upright_goal)
    w_attitude: float = 1.0
    w_omega: float = 0.1
    w_u: float = 1e-4


@dataclass(frozen=True, slots=True)
class QuadrotorTrack:
    reference: Reference = field(default_factory=HoverReference)
    w_x: float = 1.2
    w_attitude: float = 1e-5
    w_v: float = 1.2
    w_omega: float = 1e-4
    w_u: float = 1e-6


CostSpec = PendulumSwingup | QuadrotorTrack


@dataclass(frozen=True, slots=True)
class SolverConfig:
    iterations: int = 50
    lr: float = 0.1
    warm_start: bool = True
    min_lr: float = 1e-6
    grad_tol: float = 1e-9

    def __post_init__(self) -> None:
        if self.iterations < 0:
            raise ConfigError(f"solver iterations must be >= 0, got {self.iterations}")
        if not self.lr > 0:
            raise ConfigError(f"solver lr must be positive, got {self.lr}")


@dataclass(frozen=True, slots=True)
class MPCProblem:
    horizon: int
    lo: torch.Tensor
    hi: torch.Tensor
    cost: CostSpec
    integrator: IntegratorParams
    solver: SolverConfig = field(default_factory=SolverConfig)
    newton: NewtonConfig = field(default_factory=lambda: NewtonConfig(mode="unroll"))

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ConfigError(f"horizon must be >= 1, got {self.horizon}")
        if self.lo.shape != self.hi.shape or self.lo.ndim != 1:
            raise ConfigError("control bounds must be matching 1-D tensors")
        if bool((self.lo > self.hi).any()):
            raise ConfigError("control bounds require lo <= hi")

    @property
    def u_dim(self) -> int:
        return self.lo.shape[0]

    def clamp(self, u: torch.Tensor) -> torch.Tensor:
        return torch.minimum(torch.maximum(u, self.lo), self.hi)


@dataclass(frozen=True, slots=True)
class ControlPlan:
    controls: torch.Tensor
    cost: float
    iterations: int

    def shifted(self, count: int = 1) -> torch.Tensor:
        """Drop the first ``count`` controls and repeat the last one to keep the horizon."""
        n = self.controls.shape[0]
        count = min(count, n)
        tail = self.controls[count:]
        pad = self.controls[-1:].expand(count, -1)
        return torch.cat((tail, pad))


def finite_scale(lo: torch.Tensor, hi: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    """Offset and scale mapping [0, 1] onto finite boxes; unbounded channels keep unit scale."""
    finite = torch.isfinite(lo) & torch.isfinite(hi) & (hi > lo)
    offset = torch.where(finite, lo, torch.zeros_like(lo))
    scale = torch.where(finite, hi - lo, torch.ones_like(lo))
    return offset, scale
