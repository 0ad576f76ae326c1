from __future__ import annotations

import logging
import logging.config
from pathlib import Path

LOG_FORMAT = "%(levelname)-5.5s [%(name)s] %(message)s"


def setup_logging(config_path: str | Path | None = "logging.ini", level: str | int | None = None) -> None:
    """
    Configure logging from an ini file in ``fileConfig`` format, or with a plain
    stderr handler when the file is missing.

    :param config_path: Path of the ini file.
    :type config_path: str | Path | None
    :param level: Level for the ``src`` loggers, overriding the file.
    :type level: str | int | None
    """
    if config_path is not None and Path(config_path).is_file():
        logging.config.fileConfig(config_path, disable_existing_loggers=False)
    else:
        logging.basicConfig(format=LOG_FORMAT, level=logging.WARNING)
    if level is not None:
        logging.getLogger("src").setLevel(level)
