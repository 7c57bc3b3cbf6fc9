from __future__ import annotations

import logging
import sys
from pathlib import Path

LOGGER_NAME = "entsim"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: int = logging.INFO, log_file: Path | None = None) -> None:
    """Attach stderr (and optionally file) handlers to the package logger.

    Calling it again only updates the level; handlers are never duplicated.
    """
    log = logging.getLogger(LOGGER_NAME)
    log.setLevel(level)

    if log.handlers:
        for handler in log.handlers:
            handler.setLevel(level)
        return

    formatter = logging.Formatter(LOG_FORMAT)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    log.addHandler(console_handler)

    if log_file is not None:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setLevel(level)
        file_handler.setFormatter(formatter)
        log.addHandler(file_handler)
