"""core.logger

Logging helpers for toporeuse. Exposes `get_logger(name, logfile=None)`
which returns a configured `logging.Logger`. If `rich` is available the
RichHandler is used to get colored, nicer output.

All loggers are children of the ``toporeuse`` package logger, which owns the
console handler; file handlers attached to it (see `core.output`) receive
every module's records.
"""

import logging
import os
from typing import Optional

try:
    from rich.logging import RichHandler

    _RICH = True
except Exception:
    RichHandler = logging.StreamHandler
    _RICH = False

ROOT_NAME = "toporeuse"
LOG_FORMAT = "[%(asctime)s] %(levelname)s - %(name)s: %(message)s"


def _default_level() -> int:
    name = os.environ.get("TOPOREUSE_LOG_LEVEL", "INFO").upper()
    return getattr(logging, name, logging.INFO)


def get_root_logger() -> logging.Logger:
    root = logging.getLogger(ROOT_NAME)
    if root.handlers:
        return root

    root.setLevel(_default_level())
    if _RICH:
        handler = RichHandler(rich_tracebacks=True)
    else:
        handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.propagate = False
    return root


def get_logger(name: str, logfile: Optional[str] = None, level: Optional[int] = None) -> logging.Logger:
    get_root_logger()
    logger = logging.getLogger(f"{ROOT_NAME}.{name}")
    if level is not None:
        logger.setLevel(level)

    if logfile and not any(isinstance(h, logging.FileHandler) for h in logger.handlers):
        fh = logging.FileHandler(logfile)
        fh.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(fh)

    return logger
