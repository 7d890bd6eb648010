from .env import Environment
from .context import RuntimeContext, get_runtime_context
from .paths import AppPaths, resolve_paths
