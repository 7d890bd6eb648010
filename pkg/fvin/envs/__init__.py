from .datagen import DataGenSpec, trajectory_rng
from .pendulum import PendulumEnv, generate_pendulum_dataset, pendulum_embed, pendulum_extract, pendulum_step
from .quadrotor import (
    ControllerGains,
    QuadrotorEnv,
    generate_quadrotor_dataset,
    geometric_pd_control,
    quad_step,
)
from .truth import PendulumTruth, QuadrotorTruth, TruthPendulumModel, TruthQuadrotorModel, truth_model

__all__ = [
    "ControllerGains",
    "DataGenSpec",
    "PendulumEnv",
    "PendulumTruth",
    "QuadrotorEnv",
    "QuadrotorTruth",
    "TruthPendulumModel",
    "TruthQuadrotorModel",
    "generate_pendulum_dataset",
    "generate_quadrotor_dataset",
    "geometric_pd_control",
    "pendulum_embed",
    "pendulum_extract",
    "pendulum_step",
    "quad_step",
    "trajectory_rng",
    "truth_model",
]
