from .base import (
    DynamicsModel,
    PotentialEval,
    flatten_configuration,
    forces_at,
    inertia_at,
    potential_at,
    unflatten_configuration,
)
from .checkpoint import checkpoint_from_dict, checkpoint_to_dict, load_checkpoint, save_checkpoint
from .mlp import MLPSpec, mlp_forward
from .network import DEFAULT_EPSILON, NetworkModel, inertia_from_cholesky

__all__ = [
    "DEFAULT_EPSILON",
    "DynamicsModel",
    "MLPSpec",
    "NetworkModel",
    "PotentialEval",
    "checkpoint_from_dict",
    "checkpoint_to_dict",
    "flatten_configuration",
    "forces_at",
    "inertia_at",
    "inertia_from_cholesky",
    "load_checkpoint",
    "mlp_forward",
    "potential_at",
    "save_checkpoint",
    "unflatten_configuration",
]
