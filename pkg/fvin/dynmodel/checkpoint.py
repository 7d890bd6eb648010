from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

import torch

from fvin.common.config import ForceConvention
from fvin.common.errors import DimMismatch, SchemaError
from fvin.logging import get_logger

from .mlp import MLPSpec
from .network import NetworkModel

logger = get_logger(__name__)

CHECKPOINT_SCHEMA_VERSION = 1


def checkpoint_to_dict(model: NetworkModel) -> dict[str, Any]:
    def dims(spec: MLPSpec | None) -> list[int] | None:
        return list(spec.layer_dims) if spec is not None else None

    return {
        "schema_version": CHECKPOINT_SCHEMA_VERSION,
        "convention": model.convention.value,
        "layer_dims": {
            "inertia": dims(model.inertia_net),
            "potential": dims(model.potential_net),
            "gains": dims(model.gains_net),
        },
        "params": {name: model.component(name).detach().tolist() for name in model.component_sizes()},
        "epsilon": model.epsilon,
        "seed": model.seed,
    }


def checkpoint_from_dict(data: Mapping[str, Any]) -> NetworkModel:
    version = data.get("schema_version")
    if version != CHECKPOINT_SCHEMA_VERSION:
        raise SchemaError(f"Unsupported checkpoint schema_version: {version!r}")
    convention = ForceConvention.parse(data.get("convention"))
    if convention is None:
        raise SchemaError(f"Unknown convention in checkpoint: {data.get('convention')!r}")

    layer_dims = data.get("layer_dims") or {}
    params = data.get("params") or {}
    try:
        potential_net = MLPSpec(tuple(layer_dims["potential"]))
        inertia_net = MLPSpec(tuple(layer_dims["inertia"])) if layer_dims.get("inertia") else None
        gains_net = MLPSpec(tuple(layer_dims["gains"])) if layer_dims.get("gains") else None
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"Malformed layer_dims in checkpoint: {exc}") from exc

    order = ["mass", "inertia", "potential", "gains"]
    try:
        flat = [torch.tensor(params[name], dtype=torch.float64) for name in order if name in params]
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"Malformed parameter arrays in checkpoint: {exc}") from exc

    try:
        return NetworkModel(
            convention=convention,
            potential_net=potential_net,
            params=torch.cat(flat) if flat else torch.zeros(0, dtype=torch.float64),
            inertia_net=inertia_net,
            gains_net=gains_net,
            epsilon=float(data.get("epsilon", 0.01)),
            seed=data.get("seed"),
        )
    except DimMismatch as exc:
        raise SchemaError(f"Checkpoint does not match its layer_dims: {exc}") from exc


def save_checkpoint(model: NetworkModel, path: str | Path) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(checkpoint_to_dict(model), indent=2), encoding="utf-8")
    logger.info("Saved checkpoint to %s (%d parameters)", out, model.params.numel())
    return out


def load_checkpoint(path: str | Path) -> NetworkModel:
    src = Path(path)
    if not src.is_file():
        raise SchemaError(f"Checkpoint not found: {src}")
    try:
        data = json.loads(src.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"Checkpoint is not valid JSON: {exc}") from exc
    return checkpoint_from_dict(data)
