"""Logging for the ``fvin`` package.

All modules log through children of the ``fvin`` logger. The CLI attaches a
rotating file handler on the shared log file under the app's logs dir, and
stamps every record with the running command so the file can be split per
``gen-data``/``train``/``eval``/``mpc`` run.
"""

from __future__ import annotations

import logging
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional

_LOGGER_NAME = "fvin"

FILE_FORMAT = "%(asctime)s %(levelname)-7s [%(command)s] %(name)s: %(message)s"
CONSOLE_FORMAT = "%(levelname)s %(name)s: %(message)s"
MAX_LOG_BYTES = 5 * 1024 * 1024
LOG_BACKUPS = 3


class _CommandTag(logging.Filter):
    def __init__(self, command: str) -> None:
        super().__init__()
        self.command = command

    def filter(self, record: logging.LogRecord) -> bool:
        record.command = self.command
        return True


def _owned(handler: logging.Handler) -> bool:
    return getattr(handler, "_fvin_owned", False)


def setup_logging(
    log_file: Path,
    level: int = logging.INFO,
    console: bool = True,
    command: Optional[str] = None,
) -> logging.Logger:
    """Attach the file (and optionally stderr) handlers to the ``fvin`` logger.

    Handlers installed by an earlier call are closed and replaced, so
    repeated in-process invocations pick up the new level and command tag.
    Handlers added by anyone else are left alone.
    """
    logger = logging.getLogger(_LOGGER_NAME)
    logger.setLevel(level)
    for handler in [h for h in logger.handlers if _owned(h)]:
        logger.removeHandler(handler)
        handler.close()

    log_file.parent.mkdir(parents=True, exist_ok=True)
    tag = _CommandTag(command or "-")

    file_handler = RotatingFileHandler(log_file, maxBytes=MAX_LOG_BYTES, backupCount=LOG_BACKUPS, encoding="utf-8")
    file_handler.setFormatter(logging.Formatter(FILE_FORMAT, datefmt="%Y-%m-%d %H:%M:%S"))
    handlers: list[logging.Handler] = [file_handler]
    if console:
        # stderr; stdout is reserved for command results
        handlers.append(logging.StreamHandler())
        handlers[-1].setFormatter(logging.Formatter(CONSOLE_FORMAT))

    for handler in handlers:
        handler.setLevel(level)
        handler.addFilter(tag)
        handler._fvin_owned = True
        logger.addHandler(handler)

    logger.propagate = False
    logger.debug("Logging to %s", log_file)
    return logger


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """Child of the ``fvin`` logger; ``__name__`` of any fvin module works as is."""
    base = logging.getLogger(_LOGGER_NAME)
    if name is None:
        return base
    if name.startswith(_LOGGER_NAME + "."):
        name = name[len(_LOGGER_NAME) + 1 :]
    return base.getChild(name)
