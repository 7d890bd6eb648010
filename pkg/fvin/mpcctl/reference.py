from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

import torch

from fvin.common.errors import ConfigError

DIAMOND_WAYPOINTS: tuple[tuple[float, float, float], ...] = (
    (0.0, 0.0, 0.0),
    (1.0, 0.0, 0.5),
    (0.0, 1.0, 0.5),
    (-1.0, 0.0, 0.5),
    (0.0, -1.0, 0.5),
    (1.0, 0.0, 0.5),
)


class Reference(Protocol):
    def __call__(self, t: float) -> tuple[torch.Tensor, torch.Tensor]:
        """Reference position (m) and velocity (m/s) at time t (s)."""
        ...


@dataclass(frozen=True, slots=True)
class HoverReference:
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __call__(self, t: float) -> tuple[torch.Tensor, torch.Tensor]:
        return torch.tensor(self.position, dtype=torch.float64), torch.zeros(3, dtype=torch.float64)


@dataclass(frozen=True, slots=True)
class PiecewiseLinearReference:
    """Constant-velocity legs between waypoints, ``segment_time`` seconds each; holds the last waypoint."""

    waypoints: tuple[tuple[float, float, float], ...] = DIAMOND_WAYPOINTS
    segment_time: float = 2.0

    def __post_init__(self) -> None:
        if len(self.waypoints) < 1:
            raise ConfigError("reference needs at least one waypoint")
        if not self.segment_time > 0:
            raise ConfigError(f"segment_time must be positive, got {self.segment_time}")

    @property
    def duration(self) -> float:
        return self.segment_time * (len(self.waypoints) - 1)

    def __call__(self, t: float) -> tuple[torch.Tensor, torch.Tensor]:
        pts = torch.tensor(self.waypoints, dtype=torch.float64)
        if t <= 0.0 or len(self.waypoints) == 1:
            return pts[0], torch.zeros(3, dtype=torch.float64)
        if t >= self.duration:
            return pts[-1], torch.zeros(3, dtype=torch.float64)
        leg = min(int(t // self.segment_time), len(self.waypoints) - 2)
        frac = (t - leg * self.segment_time) / self.segment_time
        a, b = pts[leg], pts[leg + 1]
        return a + frac * (b - a), (b - a) / self.segment_time


def make_reference(name: str, waypoints: Sequence[Sequence[float]] | None = None, segment_time: float = 2.0) -> Reference:
    if name == "hover":
        start = tuple(waypoints[0]) if waypoints else (0.0, 0.0, 0.0)
        return HoverReference(start)
    if name == "diamond":
        pts = tuple(tuple(float(c) for c in w) for w in waypoints) if waypoints else DIAMOND_WAYPOINTS
        return PiecewiseLinearReference(pts, segment_time)
    raise ConfigError(f"Unknown reference: {name}")
