# -*- coding: utf-8 -*-

# Copyright 2025 (c) Vladislav Punko <iam.vlad.punko@gmail.com>

import logging
import logging.config
import os
import pathlib
import tempfile
import typing

__all__ = ["setup"]

_LEVELS: typing.Final[dict[str, int]] = {
    "CRITICAL": logging.CRITICAL,
    "ERROR": logging.ERROR,
    "WARNING": logging.WARNING,
    "INFO": logging.INFO,
    "DEBUG": logging.DEBUG,
    "NOTSET": logging.NOTSET,
}


def _resolve_level(level: str) -> int:
    name = os.environ.get("PYFCAGING_LOGGER_LEVEL", level).upper()

    return _LEVELS.get(name, logging.INFO)


def setup(level: str = "INFO", path: str | pathlib.Path | None = None) -> None:
    """Sets up the logging system for the package.

    Numerical warnings emitted through :mod:`warnings` (overflow in an
    exponential law, invalid values in a logarithm) are captured and routed to
    the same handlers so that a prediction run keeps a single log record.

    Parameters
    ----------
    level : str, default="INFO"
        Logging level name; ``PYFCAGING_LOGGER_LEVEL`` takes precedence.

    path : str or pathlib.Path, optional
        Log file location; ``PYFCAGING_LOGGER_PATH`` takes precedence.
    """
    filename = os.environ.get(
        "PYFCAGING_LOGGER_PATH",
        (
            str(path)
            if path is not None
            else os.path.join(tempfile.gettempdir(), "pyfcaging.log")
        ),
    )
    resolved = _resolve_level(level)

    logging.config.dictConfig(
        {
            "disable_existing_loggers": False,
            "formatters": {
                "default": {
                    "format": "%(asctime)s - %(levelname)s :: %(name)s :: %(message)s",
                },
            },
            "handlers": {
                "file": {
                    "class": "logging.FileHandler",
                    "formatter": "default",
                    "filename": filename,
                    "mode": "at",
                    "encoding": "utf-8",
                },
                "stderr": {
                    "class": "logging.StreamHandler",
                    "formatter": "default",
                    "stream": "ext://sys.stderr",
                },
            },
            "loggers": {
                "pyfcaging": {
                    "handlers": ["file", "stderr"],
                    "level": resolved,
                },
                "py.warnings": {
                    "handlers": ["file"],
                    "level": logging.WARNING,
                    "propagate": False,
                },
            },
            "version": 1,
        }
    )
    logging.captureWarnings(True)
