from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .env import Environment

APP_NAME = "liefvin"
ENV_VAR = "LIEFVIN_ENV"
PROFILE_VAR = "LIEFVIN_PROFILE"
ROOT_VAR = "LIEFVIN_DIR"


@dataclass(frozen=True)
class RuntimeContext:
    app_name: str = APP_NAME
    env: Environment = Environment.PRODUCTION

    # Optional: isolate independent experiment series
    profile: str = "default"

    # Optional: hard override all platformdirs roots (useful for tests)
    root_override: Optional[Path] = None


def get_runtime_context(
    *,
    app_name: str = APP_NAME,
    env: Environment | str | None = None,
    profile: str | None = None,
    root_override: Path | None = None,
) -> RuntimeContext:
    resolved_env = env if isinstance(env, Environment) else Environment.parse(env)
    if resolved_env is None:
        resolved_env = Environment.parse(os.getenv(ENV_VAR)) or Environment.PRODUCTION

    resolved_profile = profile or os.getenv(PROFILE_VAR) or "default"

    resolved_root = root_override
    if resolved_root is None:
        root_str = (os.getenv(ROOT_VAR) or "").strip()
        resolved_root = Path(root_str).expanduser() if root_str else None

    return RuntimeContext(
        app_name=app_name,
        env=resolved_env,
        profile=resolved_profile,
        root_override=resolved_root,
    )
