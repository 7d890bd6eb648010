from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from platformdirs import user_data_dir, user_log_dir

from .context import RuntimeContext


@dataclass(frozen=True)
class AppPaths:
    runs_dir: Path     # datasets, checkpoints, CSV outputs written without an explicit path
    logs_dir: Path     # rotating log files

    def ensure(self) -> "AppPaths":
        for d in (self.runs_dir, self.logs_dir):
            d.mkdir(parents=True, exist_ok=True)
        return self

    @property
    def log_file(self) -> Path:
        return self.logs_dir / "liefvin.log"


def resolve_paths(ctx: RuntimeContext) -> AppPaths:
    """
    Uses platformdirs. If ctx.profile != 'default', runs are nested under that profile.
    If ctx.root_override is set, it is the base and subfolders are created beneath it.
    """
    profile_suffix = "" if ctx.profile == "default" else f"profiles/{ctx.profile}"

    if ctx.root_override:
        base = ctx.root_override
        return AppPaths(base / "runs" / profile_suffix, base / "logs")

    data_base = Path(user_data_dir(ctx.app_name, appauthor=False))
    logs_base = Path(user_log_dir(ctx.app_name, appauthor=False))
    return AppPaths(data_base / "runs" / profile_suffix, logs_base)
