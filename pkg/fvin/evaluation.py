"""Evaluation quantities written as plot-ready CSV.

Each ``eval_*`` function runs its experiment, writes one CSV and returns an
``EvalReport`` whose ``lines`` the CLI prints as the summary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import TYPE_CHECKING, Callable

import torch

from fvin.common.config import POSITION_ONLY_ALGORITHMS, Algorithm, ForceConvention
from fvin.common.errors import ConfigError, DimMismatch
from fvin.common.serialize import write_csv
from fvin.diffengine.gradcheck import GradcheckReport, gradcheck, sample_indices
from fvin.dynmodel.network import NetworkModel
from fvin.envs.datagen import DataGenSpec
from fvin.envs.pendulum import generate_pendulum_dataset, pendulum_embed, pendulum_extract, pendulum_step
from fvin.envs.quadrotor import generate_quadrotor_dataset
from fvin.envs.truth import PendulumTruth, QuadrotorTruth, truth_model
from fvin.integrator.diagnostics import drift_slope, energy_trace, orthogonality_trace, rollout
from fvin.logging import get_logger
from fvin.trainer.loop import make_loss_fn
from fvin.trainer.models import TrainConfig

if TYPE_CHECKING:
    from fvin.dynmodel.base import DynamicsModel
    from fvin.experiment import ExperimentConfig

logger = get_logger(__name__)

_J_ENTRIES = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))


@dataclass(frozen=True, slots=True)
class EvalReport:
    path: Path
    lines: list[str] = field(default_factory=list)
    metrics: dict[str, float] = field(default_factory=dict)


def unforced_rollout(model: "DynamicsModel", cfg: "ExperimentConfig") -> list:
    controls = torch.zeros(cfg.evaluation.rollout_steps, cfg.system.u_dim, dtype=torch.float64)
    with torch.no_grad():
        return rollout(cfg.eval_start(), controls, model, cfg.integrator, cfg.newton)


def eval_energy(model: "DynamicsModel", cfg: "ExperimentConfig", out: str | Path) -> EvalReport:
    """E(t) of the model along its own unforced rollout, next to the ground truth's."""
    truth = truth_model(cfg.system, cfg.integrator.h)
    with torch.no_grad():
        e_model = energy_trace(unforced_rollout(model, cfg), model)
        e_truth = energy_trace(unforced_rollout(truth, cfg), truth)
    h = cfg.integrator.h
    path = write_csv(
        out,
        ["t[s]", "energy_model[J]", "energy_truth[J]"],
        ((k * h, float(a), float(b)) for k, (a, b) in enumerate(zip(e_model, e_truth))),
    )
    dev = float((e_model - e_model[0]).abs().max())
    slope = drift_slope(e_model, h)
    dev_truth = float((e_truth - e_truth[0]).abs().max())
    return EvalReport(
        path,
        [
            f"max |E(t) - E(0)|: {dev:.4e} J",
            f"energy drift slope: {slope:.4e} J/s",
            f"ground truth max |E(t) - E(0)|: {dev_truth:.4e} J",
        ],
        {"max_energy_deviation": dev, "drift_slope": slope, "truth_max_energy_deviation": dev_truth},
    )


def eval_constraint(model: "DynamicsModel", cfg: "ExperimentConfig", out: str | Path) -> EvalReport:
    errors = orthogonality_trace(unforced_rollout(model, cfg))
    h = cfg.integrator.h
    path = write_csv(out, ["t[s]", "orthogonality_error[-]"], ((k * h, float(e)) for k, e in enumerate(errors)))
    worst = float(errors.max())
    return EvalReport(path, [f"max orthogonality error: {worst:.4e}"], {"max_orthogonality_error": worst})


def _wrap(angle: torch.Tensor) -> torch.Tensor:
    return torch.remainder(angle + math.pi, 2.0 * math.pi) - math.pi


def eval_phase(model: "DynamicsModel", cfg: "ExperimentConfig", out: str | Path) -> EvalReport:
    """(phi, phi_dot) of the model rollout against the RK4 pendulum from the same start."""
    if cfg.system is not ForceConvention.PENDULUM_SO3:
        raise ConfigError("phase mode is defined for the pendulum only")
    states = unforced_rollout(model, cfg)
    phi0, rate0 = cfg.evaluation.start
    h = cfg.integrator.h
    truth_phi, truth_rate = [torch.tensor(phi0, dtype=torch.float64)], [torch.tensor(rate0, dtype=torch.float64)]
    for _ in range(len(states) - 1):
        p, r = pendulum_step(truth_phi[-1], truth_rate[-1], 0.0, h)
        truth_phi.append(p)
        truth_rate.append(r)
    rows = []
    gap = 0.0
    for k, s in enumerate(states):
        phi, rate = pendulum_extract(s)
        gap = max(gap, float(_wrap(phi - truth_phi[k]).abs()))
        rows.append((k * h, float(phi), float(rate), float(_wrap(truth_phi[k])), float(truth_rate[k])))
    path = write_csv(
        out,
        ["t[s]", "phi_model[rad]", "phi_dot_model[rad/s]", "phi_truth[rad]", "phi_dot_truth[rad/s]"],
        rows,
    )
    return EvalReport(path, [f"max phase angle gap: {gap:.4e} rad"], {"max_angle_gap": gap})


def _centered(U: torch.Tensor) -> torch.Tensor:
    return U - U.mean()


def _relative_rmse(model_U: torch.Tensor, truth_U: torch.Tensor) -> float:
    a, b = _centered(model_U), _centered(truth_U)
    return float(torch.sqrt(((a - b) ** 2).mean()) / torch.sqrt((b**2).mean()))


def _gains_or_nan(model: "DynamicsModel", x: torch.Tensor, R: torch.Tensor, shape: tuple[int, ...]) -> torch.Tensor:
    try:
        return model.gains(x, R)
    except (AttributeError, DimMismatch):
        return torch.full(shape, float("nan"), dtype=torch.float64)


def _learned_pendulum(model: "DynamicsModel", cfg: "ExperimentConfig", out: str | Path) -> EvalReport:
    n = cfg.evaluation.grid_points
    h = cfg.integrator.h
    phi = torch.linspace(-math.pi, math.pi, n, dtype=torch.float64)
    R = pendulum_embed(phi, torch.zeros_like(phi)).R
    x = torch.zeros(n, 3, dtype=torch.float64)
    with torch.no_grad():
        U = model.potential(x, R).U
        gain = _gains_or_nan(model, x, R, (n, 3))[..., 2] / h
        J = model.inertia(x, R)
    truth = PendulumTruth()
    U_truth = truth.potential(phi)
    J_truth = truth.inertia * torch.eye(3, dtype=torch.float64)
    Uc, Utc = _centered(U), _centered(U_truth)
    header = ["phi[rad]", "U_model[J]", "U_truth[J]", "gain_model[-]", "gain_truth[-]"]
    header += [f"J{i}{j}_model[kg m^2]" for i, j in _J_ENTRIES]
    header += [f"J{i}{j}_truth[kg m^2]" for i, j in _J_ENTRIES]
    rows = (
        (
            float(phi[k]),
            float(Uc[k]),
            float(Utc[k]),
            float(gain[k]),
            truth.gain,
            *(float(J[k, i, j]) for i, j in _J_ENTRIES),
            *(float(J_truth[i, j]) for i, j in _J_ENTRIES),
        )
        for k in range(n)
    )
    path = write_csv(out, header, rows)
    rmse = _relative_rmse(U, U_truth)
    mean_gain = float(gain.mean())
    J_mean = J.mean(0)
    return EvalReport(
        path,
        [
            f"centered potential relative RMSE: {rmse:.4e}",
            f"mean effective gain: {mean_gain:.4f} (truth {truth.gain:.4f})",
            "mean inertia diagonal: " + ", ".join(f"{float(J_mean[i, i]):.4e}" for i in range(3)) + f" (truth {truth.inertia:.4e})",
        ],
        {"potential_relative_rmse": rmse, "mean_gain": mean_gain},
    )


def _learned_quadrotor(model: "DynamicsModel", cfg: "ExperimentConfig", out: str | Path) -> EvalReport:
    n = cfg.evaluation.grid_points
    h = cfg.integrator.h
    z = torch.linspace(-1.0, 1.0, n, dtype=torch.float64)
    x = torch.zeros(n, 3, dtype=torch.float64)
    x[:, 2] = z
    R = torch.eye(3, dtype=torch.float64).expand(n, 3, 3)
    with torch.no_grad():
        U = model.potential(x, R).U
        m = model.mass(x, R)
        J = model.inertia(x, R)
        g = _gains_or_nan(model, x, R, (n, 6, 4)) / h
    truth = QuadrotorTruth()
    U_truth = truth.mass * truth.gravity * z
    Uc, Utc = _centered(U), _centered(U_truth)
    header = ["z[m]", "U_model[J]", "U_truth[J]", "mass_model[kg]", "thrust_gain_model[-]"]
    header += [f"torque_gain{i}_model[-]" for i in range(3)]
    header += [f"J{i}{j}_model[kg m^2]" for i, j in _J_ENTRIES]
    rows = (
        (
            float(z[k]),
            float(Uc[k]),
            float(Utc[k]),
            float(m[k]),
            float(g[k, 2, 0]),
            *(float(g[k, 3 + i, 1 + i]) for i in range(3)),
            *(float(J[k, i, j]) for i, j in _J_ENTRIES),
        )
        for k in range(n)
    )
    path = write_csv(out, header, rows)
    rmse = _relative_rmse(U, U_truth)
    mass = float(m.mean())
    return EvalReport(
        path,
        [
            f"centered potential relative RMSE: {rmse:.4e}",
            f"mass: {mass:.4e} kg (truth {truth.mass:.4e})",
            "inertia diagonal: " + ", ".join(f"{float(J[0, i, i]):.4e}" for i in range(3))
            + " (truth " + ", ".join(f"{float(truth.J[i, i]):.4e}" for i in range(3)) + ")",
        ],
        {"potential_relative_rmse": rmse, "mass": mass},
    )


def eval_learned_quantities(model: "DynamicsModel", cfg: "ExperimentConfig", out: str | Path) -> EvalReport:
    """Learned U (centered), gains and inertia on a configuration grid next to the ground truth."""
    if cfg.system is ForceConvention.PENDULUM_SO3:
        return _learned_pendulum(model, cfg, out)
    return _learned_quadrotor(model, cfg, out)


EVALUATORS: dict[str, Callable[["DynamicsModel", "ExperimentConfig", str | Path], EvalReport]] = {
    "energy": eval_energy,
    "constraint": eval_constraint,
    "phase": eval_phase,
    "learned-quantities": eval_learned_quantities,
}


def evaluate(mode: str, model: "DynamicsModel", cfg: "ExperimentConfig", out: str | Path) -> EvalReport:
    try:
        fn = EVALUATORS[mode]
    except KeyError as exc:
        raise ConfigError(f"Unknown eval mode: {mode!r}") from exc
    if model.convention is not cfg.system:
        raise ConfigError(f"model is {model.convention.value} but config is {cfg.system.value}")
    logger.info("Evaluating %s (%s)", mode, cfg.system.value)
    return fn(model, cfg, out)


# ---------------------------------------------------------------------------
# loss gradient check
# ---------------------------------------------------------------------------

GRADCHECK_HIDDEN = (8, 8)
GRADCHECK_COMPONENTS = 40


def loss_gradcheck(
    algorithm: Algorithm,
    seed: int = 0,
    *,
    system: ForceConvention = ForceConvention.PENDULUM_SO3,
    hidden: tuple[int, ...] = GRADCHECK_HIDDEN,
    components: int = GRADCHECK_COMPONENTS,
) -> GradcheckReport:
    """Reverse-mode gradient of a training loss against central differences.

    A small dataset of ``system`` and a small randomly initialized network are
    drawn from ``seed``; ``components`` parameter entries are compared.
    """
    kind = "p" if algorithm in POSITION_ONLY_ALGORITHMS else "pv"
    if system is ForceConvention.PENDULUM_SO3:
        data = generate_pendulum_dataset(DataGenSpec(trajectories=4, steps=3, seed=seed, kind=kind))
    else:
        data = generate_quadrotor_dataset(DataGenSpec(trajectories=3, steps=4, seed=seed, kind=kind))
    model = NetworkModel.initialize(system, hidden=hidden, seed=seed)
    train_cfg = TrainConfig(algorithm=algorithm, seed=seed)
    loss_fn = make_loss_fn(data, model, train_cfg)
    idx = sample_indices(model.params.numel(), components, seed)
    report = gradcheck(loss_fn, model.params.detach().clone(), indices=idx)
    logger.info(
        "Gradient check %s on %s seed %d: max relative error %.3e", algorithm, system.value, seed, report.max_rel_error
    )
    return report


def with_eval_steps(cfg: "ExperimentConfig", steps: int) -> "ExperimentConfig":
    return replace(cfg, evaluation=replace(cfg.evaluation, rollout_steps=steps))
