from __future__ import annotations

import logging
from enum import Enum
from typing import Optional


class Environment(str, Enum):
    """Run mode read from ``LIEFVIN_ENV``.

    Development runs log at DEBUG (per-iteration Newton and solver detail)
    and turn on autograd anomaly detection, which names the operation that
    produced a NaN gradient at a large cost in speed.
    """

    DEVELOPMENT = "development"
    PRODUCTION = "production"
    TEST = "test"

    @property
    def log_level(self) -> int:
        return logging.DEBUG if self is Environment.DEVELOPMENT else logging.INFO

    @property
    def detect_anomaly(self) -> bool:
        return self is Environment.DEVELOPMENT

    @classmethod
    def parse(cls, value: str | None) -> Optional["Environment"]:
        if not value:
            return None
        return _ALIASES.get(value.strip().lower())


_ALIASES = {
    "dev": Environment.DEVELOPMENT,
    "development": Environment.DEVELOPMENT,
    "prod": Environment.PRODUCTION,
    "production": Environment.PRODUCTION,
    "test": Environment.TEST,
    "testing": Environment.TEST,
}
