from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Optional

import torch

from fvin.common.config import ForceConvention, MpcTask
from fvin.common.errors import ConfigError
from fvin.common.serialize import to_jsonable
from fvin.dynmodel.network import DEFAULT_EPSILON, NetworkModel
from fvin.envs.datagen import DataGenSpec
from fvin.envs.pendulum import PendulumEnv, generate_pendulum_dataset, pendulum_embed
from fvin.envs.quadrotor import ControllerGains, QuadrotorEnv, generate_quadrotor_dataset
from fvin.envs.truth import QuadrotorTruth
from fvin.integrator.models import IntegratorParams, NewtonConfig, SE3State, SO3State
from fvin.logging import get_logger
from fvin.mpcctl.models import CostSpec, MPCProblem, PendulumSwingup, QuadrotorTrack, SolverConfig
from fvin.mpcctl.reference import make_reference
from fvin.trainer.models import Dataset, TrainConfig

logger = get_logger(__name__)

TASKS_BY_SYSTEM: dict[ForceConvention, frozenset[str]] = {
    ForceConvention.PENDULUM_SO3: frozenset({"swingup"}),
    ForceConvention.QUADROTOR_SE3: frozenset({"hover", "diamond"}),
}

_QUAD = QuadrotorTruth()

PRESETS: dict[str, dict[str, Any]] = {
    "pendulum-so3": {
        "system": "pendulum-so3",
        "seed": 0,
        "integrator": {"h": 0.02, "alpha": 0.5},
        "newton": {"max_iters": 10, "tol": 1e-12, "unroll_for_grad": 3},
        "model": {"hidden": [10, 10, 10], "epsilon": DEFAULT_EPSILON, "inertia_init": 1.0, "forced": True},
        "data": {"trajectories": 512, "steps": 10, "kind": "pv", "control_low": -3.0, "control_high": 3.0},
        "train": {"algorithm": "Ia", "iterations": 2000, "lr": 1e-3, "lr_half_life": None, "log_every": 10},
        "mpc": {
            "task": "swingup",
            "horizon": 60,
            "steps": 500,
            "apply_count": 3,
            "u_low": [-20.0],
            "u_high": [20.0],
            "init_control": [3.0],
            "start": [0.0, 0.0],
            "solver": {"iterations": 25, "lr": 0.1},
        },
        "eval": {"rollout_steps": 2000, "grid_points": 100, "start": [math.pi / 2, 0.0]},
    },
    "quadrotor-se3": {
        "system": "quadrotor-se3",
        "seed": 0,
        "integrator": {"h": 0.02, "alpha": 0.5},
        "newton": {"max_iters": 10, "tol": 1e-12, "unroll_for_grad": 3},
        # Crazyflie inertia is ~1e-5 kg m^2, far below the pendulum's epsilon floor
        "model": {"hidden": [10, 10, 10], "epsilon": 1e-7, "inertia_init": 1e-5, "forced": True},
        "data": {
            "trajectories": 36,
            "steps": 200,
            "kind": "pv",
            "keep_per_trajectory": 75,
            "start_half_width": 0.5,
            "start_tilt": 0.2,
        },
        "train": {"algorithm": "Ib", "iterations": 20000, "lr": 5e-3, "lr_half_life": 5000, "log_every": 50},
        "mpc": {
            "task": "hover",
            "horizon": 10,
            "steps": 250,
            "apply_count": 1,
            "u_low": [0.0, -_QUAD.torque_max[0], -_QUAD.torque_max[1], -_QUAD.torque_max[2]],
            "u_high": [_QUAD.thrust_max, *_QUAD.torque_max],
            "init_control": [_QUAD.hover_thrust, 0.0, 0.0, 0.0],
            "start": [0.0, 0.0, 0.0],
            "segment_time": 2.0,
            "solver": {"iterations": 30, "lr": 0.05},
        },
        "controller": {"kp_pos": 4.0, "kd_pos": 3.0, "kp_att": 2e-3, "kd_att": 3e-4},
        "eval": {"rollout_steps": 2000, "grid_points": 100, "start": [0.3, -0.2, 0.1]},
    },
}


# ---------------------------------------------------------------------------
# coercion helpers
# ---------------------------------------------------------------------------

def _coerce_bool(value: Any, name: str) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, str):
        lowered = value.strip().lower()
        if lowered in ("1", "true", "yes", "y", "on"):
            return True
        if lowered in ("0", "false", "no", "n", "off"):
            return False
    if isinstance(value, int):
        return bool(value)
    raise ConfigError(f"{name}: expected a boolean, got {value!r}")


def _coerce_int(value: Any, name: str) -> int:
    if isinstance(value, bool):
        raise ConfigError(f"{name}: expected an integer, got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, str):
        try:
            return int(value.strip())
        except ValueError:
            pass
    raise ConfigError(f"{name}: expected an integer, got {value!r}")


def _coerce_float(value: Any, name: str) -> float:
    if isinstance(value, bool):
        raise ConfigError(f"{name}: expected a number, got {value!r}")
    try:
        out = float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: expected a number, got {value!r}") from exc
    if math.isnan(out):
        raise ConfigError(f"{name}: NaN is not allowed")
    return out


def _coerce_floats(value: Any, name: str, length: Optional[int] = None) -> tuple[float, ...]:
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{name}: expected a list of numbers, got {value!r}")
    out = tuple(_coerce_float(v, f"{name}[{i}]") for i, v in enumerate(value))
    if length is not None and len(out) != length:
        raise ConfigError(f"{name}: expected {length} entries, got {len(out)}")
    return out


def _optional(value: Any, coerce, name: str):
    return None if value is None else coerce(value, name)


def _section(data: Mapping[str, Any], key: str, allowed: set[str]) -> dict[str, Any]:
    raw = data.get(key) or {}
    if not isinstance(raw, Mapping):
        raise ConfigError(f"{key}: expected an object, got {type(raw).__name__}")
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"{key}: unknown keys {sorted(unknown)}")
    return dict(raw)


def _merge(base: Mapping[str, Any], override: Mapping[str, Any]) -> dict[str, Any]:
    out = copy.deepcopy(dict(base))
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), Mapping):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


# ---------------------------------------------------------------------------
# config sections
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class ModelConfig:
    hidden: tuple[int, ...] = (10, 10, 10)
    epsilon: float = DEFAULT_EPSILON
    inertia_init: float = 1.0
    forced: bool = True

    def __post_init__(self) -> None:
        if not self.hidden or any(w < 1 for w in self.hidden):
            raise ConfigError(f"model.hidden must be a non-empty list of positive widths, got {self.hidden}")
        if not self.epsilon > 0:
            raise ConfigError(f"model.epsilon must be positive, got {self.epsilon}")
        if not self.inertia_init > 0:
            raise ConfigError(f"model.inertia_init must be positive, got {self.inertia_init}")


@dataclass(frozen=True, slots=True)
class MpcConfig:
    task: MpcTask
    u_low: tuple[float, ...]
    u_high: tuple[float, ...]
    horizon: int = 20
    steps: int = 500
    apply_count: int = 1
    init_control: Optional[tuple[float, ...]] = None
    # pendulum: (phi, phi_dot); quadrotor: initial position
    start: tuple[float, ...] = ()
    waypoints: Optional[tuple[tuple[float, float, float], ...]] = None
    segment_time: float = 2.0
    weights: tuple[tuple[str, float], ...] = ()
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ConfigError(f"mpc.horizon must be >= 1, got {self.horizon}")
        if self.steps < 0:
            raise ConfigError(f"mpc.steps must be >= 0, got {self.steps}")
        if not 1 <= self.apply_count <= self.horizon:
            raise ConfigError(f"mpc.apply_count must lie in [1, {self.horizon}], got {self.apply_count}")
        if len(self.u_low) != len(self.u_high):
            raise ConfigError("mpc.u_low and mpc.u_high differ in length")
        if any(lo > hi for lo, hi in zip(self.u_low, self.u_high)):
            raise ConfigError("mpc bounds require u_low <= u_high")
        if self.init_control is not None and len(self.init_control) != len(self.u_low):
            raise ConfigError("mpc.init_control must match the control dimension")
        if not self.segment_time > 0:
            raise ConfigError(f"mpc.segment_time must be positive, got {self.segment_time}")

    def bounds(self) -> tuple[torch.Tensor, torch.Tensor]:
        return (
            torch.tensor(self.u_low, dtype=torch.float64),
            torch.tensor(self.u_high, dtype=torch.float64),
        )

    def init_tensor(self) -> Optional[torch.Tensor]:
        if self.init_control is None:
            return None
        return torch.tensor(self.init_control, dtype=torch.float64)

    def cost_spec(self, task: MpcTask) -> CostSpec:
        weights = dict(self.weights)
        try:
            if task == "swingup":
                return PendulumSwingup(**weights)
            if task == "hover":
                reference = make_reference(task, self.waypoints or (self.start,), self.segment_time)
            else:
                reference = make_reference(task, self.waypoints, self.segment_time)
            return QuadrotorTrack(reference=reference, **weights)
        except TypeError as exc:
            raise ConfigError(f"mpc.weights: {exc}") from exc


@dataclass(frozen=True, slots=True)
class EvalConfig:
    rollout_steps: int = 2000
    grid_points: int = 100
    # pendulum: (phi, phi_dot); quadrotor: initial body angular velocity
    start: tuple[float, ...] = (math.pi / 2, 0.0)

    def __post_init__(self) -> None:
        if self.rollout_steps < 1:
            raise ConfigError(f"eval.rollout_steps must be >= 1, got {self.rollout_steps}")
        if self.grid_points < 2:
            raise ConfigError(f"eval.grid_points must be >= 2, got {self.grid_points}")


@dataclass(frozen=True, slots=True)
class ExperimentConfig:
    """Validated experiment description shared by every CLI command."""

    system: ForceConvention
    seed: int
    integrator: IntegratorParams
    newton: NewtonConfig
    model: ModelConfig
    data: DataGenSpec
    train: TrainConfig
    mpc: MpcConfig
    controller: ControllerGains = field(default_factory=ControllerGains)
    evaluation: EvalConfig = field(default_factory=EvalConfig)
    out_dir: Optional[Path] = None

    def __post_init__(self) -> None:
        conv = self.system
        if abs(self.data.h - self.integrator.h) > 1e-15 or abs(self.train.h - self.integrator.h) > 1e-15:
            raise ConfigError("data.h and train.h must equal integrator.h")
        if self.train.alpha != self.integrator.alpha:
            raise ConfigError("train.alpha must equal integrator.alpha")
        if self.mpc.task not in TASKS_BY_SYSTEM[conv]:
            raise ConfigError(f"mpc task {self.mpc.task!r} does not apply to {conv.value}")
        if len(self.mpc.u_low) != conv.u_dim:
            raise ConfigError(f"mpc bounds must have {conv.u_dim} entries for {conv.value}")
        expected_start = 2 if conv is ForceConvention.PENDULUM_SO3 else 3
        if len(self.mpc.start) != expected_start:
            raise ConfigError(f"mpc.start must have {expected_start} entries for {conv.value}")
        if len(self.evaluation.start) != expected_start:
            raise ConfigError(f"eval.start must have {expected_start} entries for {conv.value}")

    # ------------------------------------------------------------------
    # construction
    # ------------------------------------------------------------------

    @classmethod
    def preset(cls, name: str) -> "ExperimentConfig":
        conv = ForceConvention.parse(name)
        if conv is None:
            raise ConfigError(f"Unknown preset: {name!r} (expected one of {sorted(PRESETS)})")
        return cls.from_mapping({"system": conv.value})

    @classmethod
    def load(cls, source: str | Path) -> "ExperimentConfig":
        """Accept a preset name or the path of a JSON config file."""
        text = str(source)
        if ForceConvention.parse(text) is not None and not Path(text).is_file():
            return cls.preset(text)
        path = Path(text).expanduser()
        if not path.is_file():
            raise ConfigError(f"Config not found: {path} (and not a preset name)")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"Invalid JSON in {path}: {exc}") from exc
        if not isinstance(data, Mapping):
            raise ConfigError(f"{path}: top-level JSON value must be an object")
        logger.debug("Loaded config from %s", path)
        return cls.from_mapping(data)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        """Overlay ``data`` on the preset of its ``system`` and validate the result."""
        conv = ForceConvention.parse(data.get("system"))
        if conv is None:
            raise ConfigError(f"system must be one of {sorted(PRESETS)}, got {data.get('system')!r}")
        allowed_top = {"system", "seed", "integrator", "newton", "model", "data", "train", "mpc", "controller", "eval", "out_dir"}
        unknown = set(data) - allowed_top
        if unknown:
            raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
        merged = _merge(PRESETS[conv.value], data)
        seed = _coerce_int(merged.get("seed", 0), "seed")

        integ = _section(merged, "integrator", {"h", "alpha"})
        integrator = IntegratorParams(
            h=_coerce_float(integ.get("h", 0.02), "integrator.h"),
            alpha=_coerce_float(integ.get("alpha", 0.5), "integrator.alpha"),
        )

        nt = _section(merged, "newton", {"max_iters", "tol", "unroll_for_grad"})
        newton = NewtonConfig(
            max_iters=_coerce_int(nt.get("max_iters", 10), "newton.max_iters"),
            tol=_coerce_float(nt.get("tol", 1e-12), "newton.tol"),
            unroll_for_grad=_coerce_int(nt.get("unroll_for_grad", 3), "newton.unroll_for_grad"),
        )

        md = _section(merged, "model", {"hidden", "epsilon", "inertia_init", "forced"})
        hidden = md.get("hidden", [10, 10, 10])
        if not isinstance(hidden, (list, tuple)):
            raise ConfigError(f"model.hidden: expected a list, got {hidden!r}")
        model = ModelConfig(
            hidden=tuple(_coerce_int(w, "model.hidden") for w in hidden),
            epsilon=_coerce_float(md.get("epsilon", DEFAULT_EPSILON), "model.epsilon"),
            inertia_init=_coerce_float(md.get("inertia_init", 1.0), "model.inertia_init"),
            forced=_coerce_bool(md.get("forced", True), "model.forced"),
        )

        dd = _section(
            merged,
            "data",
            {"trajectories", "steps", "kind", "control_low", "control_high", "keep_per_trajectory",
             "start_half_width", "start_tilt", "seed"},
        )
        data_spec = DataGenSpec(
            trajectories=_coerce_int(dd.get("trajectories", 512), "data.trajectories"),
            steps=_coerce_int(dd.get("steps", 10), "data.steps"),
            h=integrator.h,
            seed=_coerce_int(dd.get("seed", seed), "data.seed"),
            kind=str(dd.get("kind", "pv")),
            control_low=_coerce_float(dd.get("control_low", -3.0), "data.control_low"),
            control_high=_coerce_float(dd.get("control_high", 3.0), "data.control_high"),
            keep_per_trajectory=_optional(dd.get("keep_per_trajectory"), _coerce_int, "data.keep_per_trajectory"),
            start_half_width=_coerce_float(dd.get("start_half_width", 0.5), "data.start_half_width"),
            start_tilt=_coerce_float(dd.get("start_tilt", 0.2), "data.start_tilt"),
        )

        td = _section(merged, "train", {"algorithm", "iterations", "lr", "lr_half_life", "log_every", "seed", "angle_cutoff"})
        train_kwargs: dict[str, Any] = {}
        if "angle_cutoff" in td:
            train_kwargs["angle_cutoff"] = _coerce_float(td["angle_cutoff"], "train.angle_cutoff")
        train = TrainConfig(
            algorithm=str(td.get("algorithm", "Ia")),
            alpha=integrator.alpha,
            h=integrator.h,
            iterations=_coerce_int(td.get("iterations", 2000), "train.iterations"),
            lr=_coerce_float(td.get("lr", 1e-3), "train.lr"),
            lr_half_life=_optional(td.get("lr_half_life"), _coerce_int, "train.lr_half_life"),
            seed=_coerce_int(td.get("seed", seed), "train.seed"),
            log_every=_coerce_int(td.get("log_every", 10), "train.log_every"),
            newton=newton.unrolled(),
            **train_kwargs,
        )

        mp = _section(
            merged,
            "mpc",
            {"task", "horizon", "steps", "apply_count", "u_low", "u_high", "init_control", "start",
             "waypoints", "segment_time", "weights", "solver"},
        )
        solver_raw = mp.get("solver") or {}
        if not isinstance(solver_raw, Mapping):
            raise ConfigError("mpc.solver: expected an object")
        unknown = set(solver_raw) - {"iterations", "lr", "warm_start", "min_lr", "grad_tol"}
        if unknown:
            raise ConfigError(f"mpc.solver: unknown keys {sorted(unknown)}")
        solver = SolverConfig(
            iterations=_coerce_int(solver_raw.get("iterations", 50), "mpc.solver.iterations"),
            lr=_coerce_float(solver_raw.get("lr", 0.1), "mpc.solver.lr"),
            warm_start=_coerce_bool(solver_raw.get("warm_start", True), "mpc.solver.warm_start"),
            min_lr=_coerce_float(solver_raw.get("min_lr", 1e-6), "mpc.solver.min_lr"),
            grad_tol=_coerce_float(solver_raw.get("grad_tol", 1e-9), "mpc.solver.grad_tol"),
        )
        waypoints = mp.get("waypoints")
        if waypoints is not None:
            if not isinstance(waypoints, (list, tuple)) or len(waypoints) < 2:
                raise ConfigError("mpc.waypoints: expected at least two [x, y, z] points")
            waypoints = tuple(_coerce_floats(w, "mpc.waypoints", 3) for w in waypoints)
        weights = mp.get("weights") or {}
        if not isinstance(weights, Mapping):
            raise ConfigError("mpc.weights: expected an object")
        task = str(mp.get("task", ""))
        if task not in ("swingup", "hover", "diamond"):
            raise ConfigError(f"mpc.task must be swingup, hover or diamond, got {task!r}")
        mpc = MpcConfig(
            task=task,
            u_low=_coerce_floats(mp.get("u_low", []), "mpc.u_low"),
            u_high=_coerce_floats(mp.get("u_high", []), "mpc.u_high"),
            horizon=_coerce_int(mp.get("horizon", 20), "mpc.horizon"),
            steps=_coerce_int(mp.get("steps", 500), "mpc.steps"),
            apply_count=_coerce_int(mp.get("apply_count", 1), "mpc.apply_count"),
            init_control=_optional(mp.get("init_control"), _coerce_floats, "mpc.init_control"),
            start=_coerce_floats(mp.get("start", []), "mpc.start"),
            waypoints=waypoints,
            segment_time=_coerce_float(mp.get("segment_time", 2.0), "mpc.segment_time"),
            weights=tuple(sorted((str(k), _coerce_float(v, f"mpc.weights.{k}")) for k, v in weights.items())),
            solver=solver,
        )

        cd = _section(merged, "controller", {"kp_pos", "kd_pos", "kp_att", "kd_att"})
        defaults = ControllerGains()
        controller = ControllerGains(
            **{name: _coerce_float(cd.get(name, getattr(defaults, name)), f"controller.{name}")
               for name in ("kp_pos", "kd_pos", "kp_att", "kd_att")}
        )

        ev = _section(merged, "eval", {"rollout_steps", "grid_points", "start"})
        evaluation = EvalConfig(
            rollout_steps=_coerce_int(ev.get("rollout_steps", 2000), "eval.rollout_steps"),
            grid_points=_coerce_int(ev.get("grid_points", 100), "eval.grid_points"),
            start=_coerce_floats(ev.get("start", [math.pi / 2, 0.0]), "eval.start"),
        )

        out_dir = merged.get("out_dir")
        return cls(
            system=conv,
            seed=seed,
            integrator=integrator,
            newton=newton,
            model=model,
            data=data_spec,
            train=train,
            mpc=mpc,
            controller=controller,
            evaluation=evaluation,
            out_dir=Path(out_dir).expanduser() if out_dir else None,
        )

    def to_mapping(self) -> dict[str, Any]:
        """Inverse of ``from_mapping``: the JSON layout config files use."""
        mpc = self.mpc
        out: dict[str, Any] = {
            "system": self.system.value,
            "seed": self.seed,
            "integrator": {"h": self.integrator.h, "alpha": self.integrator.alpha},
            "newton": {
                "max_iters": self.newton.max_iters,
                "tol": self.newton.tol,
                "unroll_for_grad": self.newton.unroll_for_grad,
            },
            "model": to_jsonable(self.model),
            "data": {
                "trajectories": self.data.trajectories,
                "steps": self.data.steps,
                "seed": self.data.seed,
                "kind": self.data.kind,
                "control_low": self.data.control_low,
                "control_high": self.data.control_high,
                "keep_per_trajectory": self.data.keep_per_trajectory,
                "start_half_width": self.data.start_half_width,
                "start_tilt": self.data.start_tilt,
            },
            "train": {
                "algorithm": self.train.algorithm,
                "iterations": self.train.iterations,
                "lr": self.train.lr,
                "lr_half_life": self.train.lr_half_life,
                "log_every": self.train.log_every,
                "seed": self.train.seed,
                "angle_cutoff": self.train.angle_cutoff,
            },
            "mpc": {
                "task": mpc.task,
                "horizon": mpc.horizon,
                "steps": mpc.steps,
                "apply_count": mpc.apply_count,
                "u_low": list(mpc.u_low),
                "u_high": list(mpc.u_high),
                "init_control": None if mpc.init_control is None else list(mpc.init_control),
                "start": list(mpc.start),
                "waypoints": None if mpc.waypoints is None else [list(w) for w in mpc.waypoints],
                "segment_time": mpc.segment_time,
                "weights": dict(mpc.weights),
                "solver": to_jsonable(mpc.solver),
            },
            "controller": to_jsonable(self.controller),
            "eval": to_jsonable(self.evaluation),
        }
        if self.out_dir is not None:
            out["out_dir"] = str(self.out_dir)
        return out

    # ------------------------------------------------------------------
    # overrides from CLI flags
    # ------------------------------------------------------------------

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(
            self,
            seed=seed,
            data=replace(self.data, seed=seed),
            train=replace(self.train, seed=seed),
        )

    def with_overrides(
        self,
        *,
        seed: Optional[int] = None,
        kind: Optional[str] = None,
        iterations: Optional[int] = None,
        mpc_steps: Optional[int] = None,
        task: Optional[str] = None,
    ) -> "ExperimentConfig":
        cfg = self.with_seed(seed) if seed is not None else self
        if kind is not None:
            cfg = replace(cfg, data=replace(cfg.data, kind=kind))
        if iterations is not None:
            cfg = replace(cfg, train=replace(cfg.train, iterations=iterations))
        if mpc_steps is not None or task is not None:
            cfg = replace(
                cfg,
                mpc=replace(
                    cfg.mpc,
                    steps=cfg.mpc.steps if mpc_steps is None else mpc_steps,
                    task=cfg.mpc.task if task is None else task,
                ),
            )
        return cfg

    # ------------------------------------------------------------------
    # builders
    # ------------------------------------------------------------------

    def initial_model(self) -> NetworkModel:
        return NetworkModel.initialize(
            self.system,
            hidden=self.model.hidden,
            seed=self.train.seed,
            forced=self.model.forced,
            epsilon=self.model.epsilon,
            inertia_init=self.model.inertia_init,
        )

    def generate_dataset(self) -> Dataset:
        if self.system is ForceConvention.PENDULUM_SO3:
            return generate_pendulum_dataset(self.data)
        return generate_quadrotor_dataset(self.data, gains=self.controller)

    def make_env(self) -> PendulumEnv | QuadrotorEnv:
        if self.system is ForceConvention.PENDULUM_SO3:
            env = PendulumEnv(self.integrator.h)
            env.reset(*self.mpc.start)
            return env
        env = QuadrotorEnv(self.integrator.h)
        zeros = torch.zeros(3, dtype=torch.float64)
        env.reset(SE3State(torch.tensor(self.mpc.start, dtype=torch.float64), torch.eye(3, dtype=torch.float64), zeros, zeros.clone()))
        return env

    def mpc_problem(self, task: Optional[MpcTask] = None) -> MPCProblem:
        task = task or self.mpc.task
        if task not in TASKS_BY_SYSTEM[self.system]:
            raise ConfigError(f"mpc task {task!r} does not apply to {self.system.value}")
        lo, hi = self.mpc.bounds()
        return MPCProblem(
            horizon=self.mpc.horizon,
            lo=lo,
            hi=hi,
            cost=self.mpc.cost_spec(task),
            integrator=self.integrator,
            solver=self.mpc.solver,
            newton=self.newton.unrolled(),
        )

    def eval_start(self) -> SE3State | SO3State:
        """Initial state for unforced evaluation rollouts."""
        if self.system is ForceConvention.PENDULUM_SO3:
            return pendulum_embed(*self.evaluation.start)
        zeros = torch.zeros(3, dtype=torch.float64)
        omega = torch.tensor(self.evaluation.start, dtype=torch.float64)
        return SE3State(zeros, torch.eye(3, dtype=torch.float64), zeros.clone(), omega)
