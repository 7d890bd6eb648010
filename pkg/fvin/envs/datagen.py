from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from fvin.common.errors import ConfigError

DatasetKind = Literal["pv", "p"]


@dataclass(frozen=True, slots=True)
class DataGenSpec:
    """How many trajectories to simulate and how to sample them.

    ``control_low``/``control_high`` bound the pendulum's constant control.
    The quadrotor fields (``keep_per_trajectory``, ``start_half_width``,
    ``start_tilt``) are ignored by the pendulum generator.
    """

    trajectories: int = 512
    steps: int = 10
    h: float = 0.02
    seed: int = 0
    kind: DatasetKind = "pv"
    control_low: float = -3.0
    control_high: float = 3.0
    keep_per_trajectory: Optional[int] = None
    start_half_width: float = 0.5
    start_tilt: float = 0.2

    def __post_init__(self) -> None:
        if self.trajectories < 1 or self.steps < 1:
            raise ConfigError(f"trajectories and steps must be positive, got {self.trajectories}, {self.steps}")
        if not math.isfinite(self.h) or self.h <= 0:
            raise ConfigError(f"h must be positive, got {self.h}")
        if self.kind not in ("pv", "p"):
            raise ConfigError(f"Unknown dataset kind: {self.kind}")
        if self.kind == "p" and self.steps < 2:
            raise ConfigError("position-only datasets need at least 2 steps per trajectory")
        if self.control_low > self.control_high:
            raise ConfigError("control_low must not exceed control_high")
        if self.keep_per_trajectory is not None and not 1 <= self.keep_per_trajectory <= self.steps:
            raise ConfigError(f"keep_per_trajectory must lie in [1, {self.steps}]")


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream per trajectory so results do not depend on generation order."""
    return np.random.default_rng((seed, index))


def evenly_spaced(total: int, keep: Optional[int]) -> np.ndarray:
    if keep is None or keep >= total:
        return np.arange(total)
    return np.unique(np.round(np.linspace(0, total - 1, keep)).astype(np.int64))
