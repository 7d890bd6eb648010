from .adam import AdamState, adam_step
from .gradcheck import GradcheckReport, central_differences, gradcheck, sample_indices
from .tape import ParamTape, grad, value_and_grad

__all__ = [
    "AdamState",
    "GradcheckReport",
    "ParamTape",
    "adam_step",
    "central_differences",
    "grad",
    "gradcheck",
    "sample_indices",
    "value_and_grad",
]
