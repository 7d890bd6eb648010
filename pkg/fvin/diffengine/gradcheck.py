from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import torch

from .tape import LossFn, ParamTape, grad

FD_STEP = 1e-6


@dataclass(frozen=True, slots=True)
class GradcheckReport:
    max_rel_error: float
    worst_index: int
    analytic: torch.Tensor
    numeric: torch.Tensor
    indices: torch.Tensor

    def passed(self, tol: float = 1e-5) -> bool:
        return self.max_rel_error <= tol


def central_differences(
    loss_fn: LossFn,
    params: torch.Tensor,
    indices: torch.Tensor,
    step: float = FD_STEP,
) -> torch.Tensor:
    out = torch.empty(indices.numel(), dtype=torch.float64)
    base = params.detach()
    with torch.no_grad():
        for n, i in enumerate(indices.tolist()):
            plus = base.clone()
            plus[i] += step
            minus = base.clone()
            minus[i] -= step
            out[n] = (loss_fn(plus) - loss_fn(minus)) / (2.0 * step)
    return out


def gradcheck(
    loss_fn: LossFn,
    params: torch.Tensor,
    *,
    indices: Optional[Sequence[int] | torch.Tensor] = None,
    step: float = FD_STEP,
) -> GradcheckReport:
    """Compare the reverse-mode gradient with central differences.

    Relative error per component is |a - n| / max(|a|, |n|, floor) where the
    floor is max(1e-3 * max|a|, 1e-8), so components that are zero up to
    rounding do not dominate the report.
    """
    analytic = grad(loss_fn, ParamTape(params))
    if indices is None:
        idx = torch.arange(params.numel())
    else:
        idx = torch.as_tensor(indices, dtype=torch.int64)
    numeric = central_differences(loss_fn, params, idx, step)
    a = analytic[idx]
    floor = max(1e-3 * float(analytic.abs().max()) if analytic.numel() else 0.0, 1e-8)
    denom = torch.maximum(torch.maximum(a.abs(), numeric.abs()), torch.full_like(a, floor))
    rel = (a - numeric).abs() / denom
    worst = int(rel.argmax()) if rel.numel() else 0
    return GradcheckReport(
        max_rel_error=float(rel.max()) if rel.numel() else 0.0,
        worst_index=int(idx[worst]) if idx.numel() else -1,
        analytic=a,
        numeric=numeric,
        indices=idx,
    )


def sample_indices(n_params: int, count: int, seed: int) -> torch.Tensor:
    """Deterministic subset of parameter indices (all of them when count >= n_params)."""
    if count >= n_params:
        return torch.arange(n_params)
    generator = torch.Generator().manual_seed(seed)
    return torch.randperm(n_params, generator=generator)[:count].sort().values
