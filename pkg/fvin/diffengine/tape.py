from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import torch

from fvin.common.errors import UnsupportedPrimitive

LossFn = Callable[[torch.Tensor], torch.Tensor]


@dataclass
class ParamTape:
    """Flat parameter vector with a gradient accumulator of the same shape."""

    params: torch.Tensor
    grads: torch.Tensor = field(init=False)

    def __post_init__(self) -> None:
        self.params = self.params.detach().clone().to(torch.float64)
        self.grads = torch.zeros_like(self.params)

    def zero_grad(self) -> None:
        self.grads = torch.zeros_like(self.params)


def value_and_grad(loss_fn: LossFn, tape: ParamTape) -> tuple[float, torch.Tensor]:
    """Evaluate ``loss_fn`` at the tape's parameters and accumulate its gradient.

    The loss must be a scalar tensor built from the parameters by differentiable
    torch operations; anything that leaves the graph raises UnsupportedPrimitive.
    """
    theta = tape.params.detach().requires_grad_(True)
    with torch.enable_grad():
        loss = loss_fn(theta)
        if not isinstance(loss, torch.Tensor) or loss.ndim != 0:
            raise UnsupportedPrimitive(f"loss must be a scalar tensor, got {type(loss).__name__}")
        if not loss.requires_grad:
            raise UnsupportedPrimitive("loss is not connected to the parameters through differentiable operations")
        (g,) = torch.autograd.grad(loss, theta, allow_unused=True)
    if g is None:
        g = torch.zeros_like(theta)
    tape.grads = tape.grads + g.detach()
    return float(loss.detach()), g.detach()


def grad(loss_fn: LossFn, tape: ParamTape) -> torch.Tensor:
    return value_and_grad(loss_fn, tape)[1]
