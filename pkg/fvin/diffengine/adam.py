from __future__ import annotations

from typing import Optional

import torch

from .tape import ParamTape


class AdamState:
    """Adam moments and step count for one flat parameter vector.

    Wraps ``torch.optim.Adam`` with a ``LambdaLR`` schedule
    lr_t = lr0 * 0.5 ** (t / half_life); ``half_life=None`` keeps lr fixed.
    The tape stays authoritative: every step starts from ``tape.params``.
    """

    def __init__(
        self,
        tape: ParamTape,
        lr: float,
        *,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        half_life: Optional[float] = None,
    ) -> None:
        self.betas = betas
        self.eps = eps
        self.half_life = half_life
        self._param = tape.params.detach().clone().requires_grad_(True)
        self._build(lr)

    def _build(self, lr: float) -> None:
        self.base_lr = lr
        self.optimizer = torch.optim.Adam([self._param], lr=lr, betas=self.betas, eps=self.eps)
        half_life = self.half_life
        self.scheduler = torch.optim.lr_scheduler.LambdaLR(
            self.optimizer,
            lambda t: 0.5 ** (t / half_life) if half_life else 1.0,
        )

    @property
    def step_count(self) -> int:
        state = self.optimizer.state.get(self._param)
        if not state:
            return 0
        return int(state["step"])

    @property
    def lr(self) -> float:
        return float(self.optimizer.param_groups[0]["lr"])

    def moments(self) -> tuple[torch.Tensor, torch.Tensor]:
        state = self.optimizer.state.get(self._param)
        if not state:
            zero = torch.zeros_like(self._param.detach())
            return zero, zero.clone()
        return state["exp_avg"].clone(), state["exp_avg_sq"].clone()

    def reset(self, lr: Optional[float] = None) -> None:
        """Forget the moments and restart the schedule, optionally at a new lr."""
        self._build(self.base_lr if lr is None else lr)

    def step(self, tape: ParamTape) -> torch.Tensor:
        with torch.no_grad():
            self._param.copy_(tape.params)
        self._param.grad = tape.grads.detach().clone()
        self.optimizer.step()
        self.scheduler.step()
        tape.params = self._param.detach().clone()
        return tape.params


def adam_step(state: AdamState, tape: ParamTape) -> torch.Tensor:
    return state.step(tape)
