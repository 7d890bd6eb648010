from .se3 import SE3Pose
from .so3 import (
    cayley,
    cayley_via_inverse,
    check_rotation,
    exp_so3,
    hat,
    log_so3,
    orthogonality_error,
    project_to_so3,
    rotation_angle,
    vee,
)

__all__ = [
    "SE3Pose",
    "cayley",
    "cayley_via_inverse",
    "check_rotation",
    "exp_so3",
    "hat",
    "log_so3",
    "orthogonality_error",
    "project_to_so3",
    "rotation_angle",
    "vee",
]
