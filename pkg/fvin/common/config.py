from __future__ import annotations

from enum import Enum
from typing import Literal, Optional

Algorithm = Literal["Ia", "Ib", "IIa", "IIb"]
EvalMode = Literal["energy", "constraint", "phase", "learned-quantities"]
MpcTask = Literal["swingup", "hover", "diamond"]

POSITION_VELOCITY_ALGORITHMS: frozenset[str] = frozenset({"Ia", "Ib"})
POSITION_ONLY_ALGORITHMS: frozenset[str] = frozenset({"IIa", "IIb"})


class ForceConvention(str, Enum):
    """System identity: fixes configuration layout, control dimension and force mapping."""

    PENDULUM_SO3 = "pendulum-so3"
    QUADROTOR_SE3 = "quadrotor-se3"

    @property
    def u_dim(self) -> int:
        return 1 if self is ForceConvention.PENDULUM_SO3 else 4

    @property
    def q_dim(self) -> int:
        return 9 if self is ForceConvention.PENDULUM_SO3 else 12

    @property
    def translational(self) -> bool:
        return self is ForceConvention.QUADROTOR_SE3

    @classmethod
    def parse(cls, value: str | None) -> Optional["ForceConvention"]:
        if not value:
            return None
        v = value.strip().lower().replace("_", "-")
        if v in {"pendulum", "pendulum-so3", "so3"}:
            return cls.PENDULUM_SO3
        if v in {"quadrotor", "quadrotor-se3", "se3"}:
            return cls.QUADROTOR_SE3
        return None
