"""
Logging module for the carousel bandit workbench.

Simulation runs log to the console and to a daily rotating file under the
configured log directory. Components get child loggers of
``carousel_bandit`` so a single root configuration covers all of them.
"""

import logging
import os
from datetime import datetime
from logging.handlers import TimedRotatingFileHandler
from pathlib import Path
from typing import Dict, Optional, Union

from src.config import get_file_config

APP_LOGGER_NAME = "carousel_bandit"

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'

# Component loggers handed out so far
_loggers: Dict[str, logging.Logger] = {}


def _default_log_file() -> Path:
    file_config = get_file_config()
    log_filename = datetime.now().strftime(file_config["log_filename_format"])
    return Path(file_config["log_dir"]) / log_filename


def _file_handler(log_file: Path, level: int) -> logging.Handler:
    os.makedirs(os.path.dirname(log_file), exist_ok=True)
    handler = TimedRotatingFileHandler(
        log_file,
        when='midnight',
        backupCount=30,
        encoding='utf-8'
    )
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
    return handler


def _console_handler(level: int) -> logging.Handler:
    handler = logging.StreamHandler()
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
    return handler


def setup_logger(
    name: Optional[str],
    log_level: int = logging.INFO,
    log_to_console: bool = True,
    log_file: Optional[Path] = None,
    log_to_file: bool = True
) -> logging.Logger:
    """
    Set up a logger with its own handlers.

    Args:
        name: The name of the logger (None for the root logger)
        log_level: The logging level to use
        log_to_console: Whether to also log to the console
        log_file: Custom log file path (if None, uses the dated default)
        log_to_file: Whether to add the rotating file handler

    Returns:
        A configured logger instance
    """
    logger = logging.getLogger(name)
    logger.setLevel(log_level)

    for handler in logger.handlers[:]:
        logger.removeHandler(handler)

    # Named loggers must not duplicate records through the root
    logger.propagate = False

    if log_to_file:
        logger.addHandler(_file_handler(log_file or _default_log_file(), log_level))
    if log_to_console:
        logger.addHandler(_console_handler(log_level))

    return logger


def setup_logging(level: Union[str, int] = "INFO", log_to_file: bool = True) -> None:
    """
    Configure the root logger for a command-line run.

    Call once at start-up; component loggers propagate to the root handlers.

    Args:
        level: Logging level name ("INFO", "DEBUG") or numeric level
        log_to_file: Whether to add the rotating file handler
    """
    global _loggers
    _loggers = {}

    if isinstance(level, str):
        level = getattr(logging, level.upper())

    setup_logger(None, level, log_to_console=True, log_to_file=log_to_file)

    app = logging.getLogger(APP_LOGGER_NAME)
    app.setLevel(level)
    app.handlers.clear()
    app.propagate = True


app_logger = logging.getLogger(APP_LOGGER_NAME)


def get_logger(component: Optional[str] = None) -> logging.Logger:
    """
    Get the logger of a workbench component.

    Args:
        component: Optional component name (e.g., 'runner', 'policies')

    Returns:
        The application logger, or its ``carousel_bandit.<component>`` child
    """
    if component is None:
        return app_logger

    logger_name = f"{APP_LOGGER_NAME}.{component}"
    if logger_name in _loggers:
        return _loggers[logger_name]

    # Records reach the root handlers installed by setup_logging
    logger = logging.getLogger(logger_name)
    logger.propagate = True

    _loggers[logger_name] = logger
    return logger
