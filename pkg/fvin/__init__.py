from .dynmodel import NetworkModel
from .experiment import ExperimentConfig
from .integrator import SE3State, SO3State, step_position_only, step_se3, step_so3

__all__ = [
    "ExperimentConfig",
    "NetworkModel",
    "SE3State",
    "SO3State",
    "step_position_only",
    "step_se3",
    "step_so3",
]
