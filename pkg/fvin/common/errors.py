from __future__ import annotations


class FvinError(Exception):
    """Base class for every error raised by fvin."""


# Validation failures (CLI exit code 1)


class ValidationError(FvinError, ValueError):
    pass


class NonSkewInput(ValidationError):
    pass


class NotARotation(ValidationError):
    pass


class DimMismatch(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class SchemaError(ValidationError):
    pass


# Numerical failures (CLI exit code 2)


class NumericalFailure(FvinError, RuntimeError):
    pass


class NewtonDiverged(NumericalFailure):
    def __init__(self, residual: float, iterations: int) -> None:
        super().__init__(f"Newton solve did not converge: residual {residual:.3e} after {iterations} iterations")
        self.residual = residual
        self.iterations = iterations


class RolloutError(NumericalFailure):
    def __init__(self, step: int, cause: Exception) -> None:
        super().__init__(f"step {step}: {cause}")
        self.step = step
        self.cause = cause


class UnsupportedPrimitive(NumericalFailure):
    pass


class NonFiniteLoss(NumericalFailure):
    def __init__(self, iteration: int, last_finite: float | None) -> None:
        super().__init__(f"loss became non-finite at iteration {iteration} (last finite value: {last_finite})")
        self.iteration = iteration
        self.last_finite = last_finite


class NonFiniteCost(NumericalFailure):
    pass


class ControllerDiverged(NumericalFailure):
    def __init__(self, trajectory: int, step: int, reason: str) -> None:
        super().__init__(f"trajectory {trajectory}, step {step}: {reason}")
        self.trajectory = trajectory
        self.step = step
