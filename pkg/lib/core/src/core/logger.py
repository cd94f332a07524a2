"""
core.logger
dictConfig-based logging for the wpnav packages: plain text on the console,
JSON lines in an optional log file.
"""

import logging
from logging import Logger as T_Logger
from logging.config import dictConfig
from pathlib import Path
from typing import Any, Dict, Optional

from pythonjsonlogger.json import JsonFormatter  # type: ignore # noqa F401

from core.constants import LOGGER_NAME


def logging_config(level: str = "INFO", log_file: Optional[Path] = None) -> Dict[str, Any]:
    """Build the dictConfig mapping for the given level and optional log file."""
    level = level.upper()
    handlers: Dict[str, Any] = {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "standard",
            "level": level,
            "stream": "ext://sys.stderr",
        },
    }
    if log_file is not None:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        handlers["file"] = {
            "class": "logging.FileHandler",
            "filename": str(log_file),
            "formatter": "json",
            "level": level,
        }
    return {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "json": {
                "()": "pythonjsonlogger.json.JsonFormatter",
                "fmt": "%(asctime)s %(levelname)s %(name)s %(message)s",
            },
            "standard": {
                "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
            },
        },
        "handlers": handlers,
        "loggers": {
            LOGGER_NAME: {
                "handlers": list(handlers),
                "level": level,
                "propagate": False,
            },
        },
    }


def configure_logging(level: str = "INFO", log_file: Optional[Path] = None) -> T_Logger:
    """Install the wpnav logging config and return the package logger."""
    dictConfig(logging_config(level, log_file))
    logger = logging.getLogger(LOGGER_NAME)
    logger.getChild("SYSTEM").debug(
        "Logging configured", extra={"level": level, "log_file": str(log_file)}
    )
    return logger


def get_logger(name: str) -> T_Logger:
    """Child of the package logger, e.g. get_logger("sim") -> wpnav.sim."""
    return logging.getLogger(LOGGER_NAME).getChild(name)


__all__ = ["configure_logging", "get_logger", "logging_config"]
