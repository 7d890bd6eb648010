from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Iterator, Mapping, Optional

import torch

from fvin.common.config import ForceConvention
from fvin.common.errors import SchemaError
from fvin.logging import get_logger

from .models import Dataset, TransitionP, TransitionPV

logger = get_logger(__name__)

DATASET_SCHEMA_VERSION = 1
KIND_PV = "pv"
KIND_P = "p"


@dataclass(frozen=True, slots=True)
class DatasetManifest:
    convention: ForceConvention
    kind: str
    count: int
    h: float
    seed: int
    schema_version: int = DATASET_SCHEMA_VERSION
    trajectories: Optional[int] = None
    steps_per_trajectory: Optional[int] = None

    def to_dict(self) -> dict[str, Any]:
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data["convention"] = self.convention.value
        return {k: v for k, v in data.items() if v is not None}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "DatasetManifest":
        if data.get("schema_version") != DATASET_SCHEMA_VERSION:
            raise SchemaError(f"Unsupported dataset schema_version: {data.get('schema_version')!r}")
        convention = ForceConvention.parse(data.get("convention"))
        if convention is None:
            raise SchemaError(f"Unknown convention in manifest: {data.get('convention')!r}")
        kind = data.get("kind")
        if kind not in (KIND_PV, KIND_P):
            raise SchemaError(f"Unknown dataset kind: {kind!r}")
        try:
            return cls(
                convention=convention,
                kind=kind,
                count=int(data["count"]),
                h=float(data["h"]),
                seed=int(data["seed"]),
                trajectories=data.get("trajectories"),
                steps_per_trajectory=data.get("steps_per_trajectory"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"Malformed dataset manifest: {exc}") from exc


def manifest_path(path: str | Path) -> Path:
    p = Path(path)
    return p.with_name(p.name + ".manifest.json")


def dataset_kind(dataset: Dataset) -> str:
    return KIND_PV if isinstance(dataset, TransitionPV) else KIND_P


def _rows(dataset: Dataset) -> Iterator[dict[str, Any]]:
    names = [f.name for f in fields(dataset)]
    columns = {name: getattr(dataset, name).tolist() for name in names}
    for i in range(len(dataset)):
        yield {name: columns[name][i] for name in names}


def write_dataset(path: str | Path, dataset: Dataset, manifest: DatasetManifest) -> Path:
    """One JSON object per line plus ``<path>.manifest.json``."""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as fh:
        for row in _rows(dataset):
            fh.write(json.dumps(row, separators=(",", ":")))
            fh.write("\n")
    manifest_path(out).write_text(json.dumps(manifest.to_dict(), indent=2), encoding="utf-8")
    logger.info("Wrote %d %s transitions to %s", len(dataset), manifest.kind, out)
    return out


def read_dataset(path: str | Path) -> tuple[Dataset, DatasetManifest]:
    src = Path(path)
    if not src.is_file():
        raise SchemaError(f"Dataset not found: {src}")
    mpath = manifest_path(src)
    if not mpath.is_file():
        raise SchemaError(f"Dataset manifest not found: {mpath}")
    try:
        manifest = DatasetManifest.from_dict(json.loads(mpath.read_text(encoding="utf-8")))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"Manifest is not valid JSON: {exc}") from exc

    cls = TransitionPV if manifest.kind == KIND_PV else TransitionP
    names = [f.name for f in fields(cls)]
    columns: dict[str, list[Any]] = {name: [] for name in names}
    with src.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                for name in names:
                    columns[name].append(row[name])
            except (json.JSONDecodeError, KeyError) as exc:
                raise SchemaError(f"{src}:{lineno}: malformed transition ({exc})") from exc

    if len(columns[names[0]]) != manifest.count:
        raise SchemaError(f"Manifest promises {manifest.count} transitions, file holds {len(columns[names[0]])}")
    try:
        dataset = cls(**{name: torch.tensor(values, dtype=torch.float64) for name, values in columns.items()})
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{src}: {exc}") from exc
    if dataset.u_dim != manifest.convention.u_dim:
        raise SchemaError(f"Controls have dimension {dataset.u_dim}, {manifest.convention.value} expects {manifest.convention.u_dim}")
    return dataset, manifest
