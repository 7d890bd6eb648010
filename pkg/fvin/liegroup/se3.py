from __future__ import annotations

from dataclasses import dataclass

import torch

from fvin.common.errors import DimMismatch

from .so3 import check_rotation


@dataclass(frozen=True, slots=True)
class SE3Pose:
    """Rigid-body pose (x, R); tensors may carry a shared leading batch shape."""

    x: torch.Tensor
    R: torch.Tensor

    def __post_init__(self) -> None:
        if self.x.shape[-1:] != (3,):
            raise DimMismatch(f"x must have trailing dimension 3, got {tuple(self.x.shape)}")
        check_rotation(self.R)

    @property
    def batch_shape(self) -> torch.Size:
        return self.R.shape[:-2]

    def compose(self, other: "SE3Pose") -> "SE3Pose":
        return SE3Pose(self.x + (self.R @ other.x[..., None]).squeeze(-1), self.R @ other.R)
