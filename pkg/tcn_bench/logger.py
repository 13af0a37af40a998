"""Package logger for tcn-bench, mirrored into a run's log file while a command runs."""

import logging
import sys
from pathlib import Path

__all__ = [
    "setup_logger",
    "logger",
    "set_debug_mode",
    "attach_file_handler",
    "detach_file_handler",
]

_FORMAT = "%(levelname)s: %(message)s"


def setup_logger(
    name: str = "tcn_bench", level: int = logging.INFO, debug: bool = False
) -> logging.Logger:
    """Configure and return a logger writing to stdout; safe to call repeatedly."""
    log = logging.getLogger(name)
    log.setLevel(logging.DEBUG if debug else level)
    if log.handlers:
        return log

    handler = logging.StreamHandler(sys.stdout)
    handler.setLevel(logging.DEBUG if debug else logging.INFO)
    handler.setFormatter(logging.Formatter(_FORMAT))
    log.addHandler(handler)
    return log


logger = setup_logger()


def set_debug_mode(enabled: bool) -> None:
    """Switch the package logger and all its handlers between DEBUG and INFO."""
    level = logging.DEBUG if enabled else logging.INFO
    logger.setLevel(level)
    for handler in logger.handlers:
        handler.setLevel(level)


def attach_file_handler(path: Path) -> logging.FileHandler:
    handler = logging.FileHandler(path, mode="a", encoding="utf-8")
    handler.setLevel(logger.level)
    handler.setFormatter(logging.Formatter(_FORMAT))
    logger.addHandler(handler)
    return handler


def detach_file_handler(handler: logging.FileHandler) -> None:
    """Remove and close a handler added by attach_file_handler."""
    logger.removeHandler(handler)
    handler.close()
