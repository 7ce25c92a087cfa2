"""
Unit tests for the logging module.
"""

import logging
import tempfile
from logging.handlers import TimedRotatingFileHandler
from pathlib import Path
from unittest.mock import patch

import pytest

from src.logger import APP_LOGGER_NAME, get_logger, setup_logger, setup_logging


@pytest.fixture
def restore_root_logger():
    """Put the root and application loggers back after a test reconfigures them."""
    root = logging.getLogger()
    app = logging.getLogger(APP_LOGGER_NAME)
    saved = (root.level, root.handlers[:], app.level, app.handlers[:], app.propagate)
    yield
    for handler in root.handlers[:]:
        if handler not in saved[1]:
            handler.close()
    root.setLevel(saved[0])
    root.handlers[:] = saved[1]
    app.setLevel(saved[2])
    app.handlers[:] = saved[3]
    app.propagate = saved[4]


def test_setup_logger_creates_proper_logger():
    """Test that setup_logger creates a properly configured logger."""
    with tempfile.TemporaryDirectory() as temp_dir:
        temp_log_file = Path(temp_dir) / "test.log"

        logger = setup_logger(
            "test_logger",
            log_level=logging.DEBUG,
            log_to_console=False,
            log_file=temp_log_file
        )

        assert logger.name == "test_logger"
        assert logger.level == logging.DEBUG
        assert len(logger.handlers) == 1  # Should have one file handler
        assert not logger.propagate

        test_message = "Test log message"
        logger.debug(test_message)
        for handler in logger.handlers:
            handler.flush()

        assert temp_log_file.exists(), "Log file should be created"
        assert test_message in temp_log_file.read_text(encoding="utf-8")

        for handler in logger.handlers[:]:
            handler.close()
            logger.removeHandler(handler)


def test_setup_logger_with_console_output():
    """Test that setup_logger properly configures console output when requested."""
    with tempfile.TemporaryDirectory() as temp_dir:
        logger = setup_logger(
            "test_console_logger",
            log_level=logging.INFO,
            log_to_console=True,
            log_file=Path(temp_dir) / "test.log"
        )

        # Should have both file and console handlers
        assert len(logger.handlers) == 2
        handler_types = [type(handler) for handler in logger.handlers]
        assert logging.StreamHandler in handler_types, "Should have StreamHandler for console output"

        for handler in logger.handlers[:]:
            handler.close()
            logger.removeHandler(handler)


def test_get_logger_default():
    """Test that get_logger returns the application logger when no component is specified."""
    assert get_logger().name == "carousel_bandit"


def test_get_logger_component():
    """Test that get_logger returns a properly named component logger."""
    logger = get_logger("runner")
    assert logger.name == "carousel_bandit.runner"
    assert logger.propagate
    assert get_logger("runner") is logger


def test_setup_logging_configures_root(restore_root_logger):
    """Test that setup_logging installs console and file handlers on the root logger."""
    with tempfile.TemporaryDirectory() as temp_dir:
        with patch("src.logger._default_log_file", return_value=Path(temp_dir) / "run.log"):
            setup_logging("DEBUG")
            root = logging.getLogger()
            assert root.level == logging.DEBUG
            assert len(root.handlers) == 2
            assert logging.getLogger(APP_LOGGER_NAME).propagate
            for handler in root.handlers:
                handler.close()


def test_setup_logging_without_file(restore_root_logger):
    """Test that file logging can be switched off."""
    setup_logging(logging.WARNING, log_to_file=False)
    root = logging.getLogger()
    assert root.level == logging.WARNING
    assert [type(handler) for handler in root.handlers] == [logging.StreamHandler]


def test_setup_logging_uses_setup_logger(restore_root_logger):
    """Test that the root configuration is built by setup_logger, file handler first."""
    with tempfile.TemporaryDirectory() as temp_dir:
        with patch("src.logger._default_log_file", return_value=Path(temp_dir) / "run.log"), \
                patch("src.logger.setup_logger", wraps=setup_logger) as mock_setup:
            setup_logging("INFO")
            mock_setup.assert_called_once_with(None, logging.INFO, log_to_console=True, log_to_file=True)
            root = logging.getLogger()
            assert [type(handler) for handler in root.handlers] == [TimedRotatingFileHandler, logging.StreamHandler]
            for handler in root.handlers:
                handler.close()
