from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import torch

from fvin.common.config import ForceConvention
from fvin.common.errors import ConfigError, NumericalFailure, SchemaError, ValidationError
from fvin.dynmodel.checkpoint import load_checkpoint, save_checkpoint
from fvin.envs.truth import truth_model
from fvin.evaluation import EVALUATORS, evaluate, loss_gradcheck, with_eval_steps
from fvin.experiment import ExperimentConfig
from fvin.logging import get_logger, setup_logging
from fvin.mpcctl.closed_loop import run_closed_loop, summarize_closed_loop, write_closed_loop_csv
from fvin.runtime import get_runtime_context, resolve_paths
from fvin.trainer.dataset import DatasetManifest, dataset_kind, read_dataset, write_dataset
from fvin.trainer.loop import train, write_loss_history

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2

GRADCHECK_TOL = 1e-5


def _runs_dir(cfg: ExperimentConfig | None = None) -> Path:
    if cfg is not None and cfg.out_dir is not None:
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        return cfg.out_dir
    return resolve_paths(get_runtime_context()).ensure().runs_dir


def _out_path(value: str | None, cfg: ExperimentConfig | None, default_name: str) -> Path:
    if value:
        return Path(value).expanduser()
    return _runs_dir(cfg) / default_name


def _load_config(source: str | None, fallback: str) -> ExperimentConfig:
    return ExperimentConfig.load(source or fallback)


def _load_model(checkpoint: str, config: str | None):
    """Return (model, config); ``truth`` selects the ground-truth parameters of the config's system."""
    if checkpoint == "truth":
        cfg = _load_config(config, "pendulum-so3")
        return truth_model(cfg.system, cfg.integrator.h), cfg
    model = load_checkpoint(checkpoint)
    cfg = _load_config(config, model.convention.value)
    if cfg.system is not model.convention:
        raise ConfigError(f"checkpoint is {model.convention.value} but config is {cfg.system.value}")
    return model, cfg


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="liefvin", description="Forced Lie group variational integrator networks")
    parser.add_argument("--verbose", action="store_true", help="Also log to stderr")
    subparsers = parser.add_subparsers(dest="command", required=True)

    gen = subparsers.add_parser("gen-data", help="Simulate the true system and write a JSON-lines dataset")
    gen.add_argument("--config", required=True, help="Preset name (pendulum-so3, quadrotor-se3) or config JSON path")
    gen.add_argument("--out", help="Dataset path (manifest is written next to it)")
    gen.add_argument("--seed", type=int, help="Override the config seed")
    gen.add_argument("--kind", choices=["pv", "p"], help="Position-velocity pairs or position-only triples")

    tr = subparsers.add_parser("train", help="Fit a network model to a dataset")
    tr.add_argument("--config", required=True, help="Preset name or config JSON path")
    tr.add_argument("--data", required=True, help="Dataset written by gen-data")
    tr.add_argument("--out-checkpoint", help="Checkpoint JSON path")
    tr.add_argument("--loss-csv", help="Loss history CSV path")
    tr.add_argument("--iterations", type=int, help="Override train.iterations")
    tr.add_argument("--seed", type=int, help="Override the config seed")

    ev = subparsers.add_parser("eval", help="Write evaluation quantities of a model as CSV")
    ev.add_argument("--checkpoint", required=True, help="Checkpoint path, or 'truth' for ground-truth parameters")
    ev.add_argument("--mode", required=True, choices=sorted(EVALUATORS), help="Quantity to evaluate")
    ev.add_argument("--out-csv", help="CSV path")
    ev.add_argument("--config", help="Preset name or config JSON path (defaults to the checkpoint's system)")
    ev.add_argument("--steps", type=int, help="Override eval.rollout_steps")

    mpc = subparsers.add_parser("mpc", help="Run closed-loop MPC on the true system with a model")
    mpc.add_argument("--checkpoint", required=True, help="Checkpoint path, or 'truth' for ground-truth parameters")
    mpc.add_argument("--task", choices=["swingup", "hover", "diamond"], help="Control task (defaults to mpc.task)")
    mpc.add_argument("--log-csv", help="Closed-loop log CSV path")
    mpc.add_argument("--config", help="Preset name or config JSON path (defaults to the checkpoint's system)")
    mpc.add_argument("--steps", type=int, help="Override mpc.steps")

    gc = subparsers.add_parser("gradcheck", help="Compare loss gradients with central differences")
    gc.add_argument("--algorithm", required=True, choices=["Ia", "Ib", "IIa", "IIb"], help="Training algorithm")
    gc.add_argument(
        "--system", choices=["pendulum-so3", "quadrotor-se3"], default="pendulum-so3", help="System whose dataset and network are drawn"
    )
    gc.add_argument("--seed", type=int, default=0, help="Seed of the first draw")
    gc.add_argument("--draws", type=int, default=1, help="Number of random draws")

    return parser


def _run_gen_data(args: argparse.Namespace) -> int:
    cfg = ExperimentConfig.load(args.config).with_overrides(seed=args.seed, kind=args.kind)
    dataset = cfg.generate_dataset()
    out = _out_path(args.out, cfg, f"{cfg.system.value}-{cfg.data.kind}-seed{cfg.data.seed}.jsonl")
    manifest = DatasetManifest(
        convention=cfg.system,
        kind=dataset_kind(dataset),
        count=len(dataset),
        h=cfg.data.h,
        seed=cfg.data.seed,
        trajectories=cfg.data.trajectories,
        steps_per_trajectory=cfg.data.steps,
    )
    write_dataset(out, dataset, manifest)
    print(f"dataset: {out.resolve()}")
    print(f"transitions: {len(dataset)} ({manifest.kind})")
    return EXIT_OK


def _run_train(args: argparse.Namespace) -> int:
    cfg = ExperimentConfig.load(args.config).with_overrides(seed=args.seed, iterations=args.iterations)
    dataset, manifest = read_dataset(args.data)
    if manifest.convention is not cfg.system:
        raise SchemaError(f"dataset is {manifest.convention.value} but config is {cfg.system.value}")
    if abs(manifest.h - cfg.integrator.h) > 1e-15:
        raise SchemaError(f"dataset step {manifest.h} differs from integrator step {cfg.integrator.h}")

    result = train(dataset, cfg.initial_model(), cfg.train)

    stem = f"{cfg.system.value}-{cfg.train.algorithm}-seed{cfg.train.seed}"
    ckpt = save_checkpoint(result.model, _out_path(args.out_checkpoint, cfg, f"{stem}.checkpoint.json"))
    loss_csv = write_loss_history(_out_path(args.loss_csv, cfg, f"{stem}.loss.csv"), result.history)
    config_snapshot = ckpt.with_name(ckpt.name + ".config.json")
    config_snapshot.write_text(json.dumps(cfg.to_mapping(), indent=2), encoding="utf-8")

    first = result.history[0][1] if result.history else float("nan")
    print(f"checkpoint: {ckpt.resolve()}")
    print(f"loss history: {loss_csv.resolve()}")
    print(f"loss: {first:.4e} -> {result.final_loss:.4e}")
    return EXIT_OK


def _run_eval(args: argparse.Namespace) -> int:
    model, cfg = _load_model(args.checkpoint, args.config)
    if args.steps is not None:
        cfg = with_eval_steps(cfg, args.steps)
    out = _out_path(args.out_csv, cfg, f"{cfg.system.value}-eval-{args.mode}.csv")
    report = evaluate(args.mode, model, cfg, out)
    print(f"csv: {report.path.resolve()}")
    for line in report.lines:
        print(line)
    return EXIT_OK


def _run_mpc(args: argparse.Namespace) -> int:
    model, cfg = _load_model(args.checkpoint, args.config)
    cfg = cfg.with_overrides(mpc_steps=args.steps, task=args.task)
    prob = cfg.mpc_problem()
    env = cfg.make_env()
    log = run_closed_loop(env, model, prob, cfg.mpc.steps, cfg.mpc.apply_count, init_control=cfg.mpc.init_tensor())
    out = write_closed_loop_csv(_out_path(args.log_csv, cfg, f"{cfg.system.value}-mpc-{cfg.mpc.task}.csv"), log)
    summary = summarize_closed_loop(log, prob.cost)
    print(f"log: {out.resolve()}")
    for line in summary.lines():
        print(line)
    return EXIT_OK


def _run_gradcheck(args: argparse.Namespace) -> int:
    if args.draws < 1:
        raise ConfigError(f"--draws must be >= 1, got {args.draws}")
    system = ForceConvention.parse(args.system)
    worst = 0.0
    for seed in range(args.seed, args.seed + args.draws):
        worst = max(worst, loss_gradcheck(args.algorithm, seed, system=system).max_rel_error)
    passed = worst <= GRADCHECK_TOL
    print(f"algorithm: {args.algorithm} ({system.value})")
    print(f"max relative gradient error: {worst:.3e} ({'pass' if passed else 'FAIL'}, tol {GRADCHECK_TOL:.0e})")
    return EXIT_OK if passed else EXIT_NUMERICAL


_COMMANDS = {
    "gen-data": _run_gen_data,
    "train": _run_train,
    "eval": _run_eval,
    "mpc": _run_mpc,
    "gradcheck": _run_gradcheck,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    ctx = get_runtime_context()
    paths = resolve_paths(ctx).ensure()
    setup_logging(paths.log_file, level=ctx.env.log_level, console=args.verbose, command=args.command)
    torch.autograd.set_detect_anomaly(ctx.env.detect_anomaly)
    logger.debug("Command %s (env=%s, profile=%s)", args.command, ctx.env.value, ctx.profile)

    try:
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        logger.error("%s failed: %s", args.command, exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalFailure as exc:
        logger.error("%s failed: %s", args.command, exc)
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        logger.error("%s failed: %s", args.command, exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    raise SystemExit(main())
