from .diagnostics import (
    ELResidual,
    drift_slope,
    energy_trace,
    euler_lagrange_defects,
    euler_lagrange_residual,
    legendre_momenta,
    orthogonality_trace,
    rollout,
    total_energy,
)
from .models import DiscreteForces, IntegratorParams, NewtonConfig, SE3State, SO3State
from .newton import AttitudeSolution, matrix_residual, nonstandard_inertia, solve_attitude
from .step import step_position_only, step_se3, step_so3, xi_of

__all__ = [
    "AttitudeSolution",
    "DiscreteForces",
    "ELResidual",
    "IntegratorParams",
    "NewtonConfig",
    "SE3State",
    "SO3State",
    "drift_slope",
    "energy_trace",
    "euler_lagrange_defects",
    "euler_lagrange_residual",
    "legendre_momenta",
    "matrix_residual",
    "nonstandard_inertia",
    "orthogonality_trace",
    "rollout",
    "solve_attitude",
    "step_position_only",
    "step_se3",
    "step_so3",
    "total_energy",
    "xi_of",
]
