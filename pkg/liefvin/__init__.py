from fvin.dynmodel import NetworkModel
from fvin.experiment import ExperimentConfig
from fvin.integrator import SE3State, SO3State, step_position_only, step_se3, step_so3
from fvin.mpcctl import run_closed_loop, solve_mpc
from fvin.trainer import train

__all__ = [
    "ExperimentConfig",
    "NetworkModel",
    "SE3State",
    "SO3State",
    "run_closed_loop",
    "solve_mpc",
    "step_position_only",
    "step_se3",
    "step_so3",
    "train",
]
