"""Tests for the logging utility module.

This module contains tests for logger lookup and for the process-wide
configuration the command line installs. The tests cover:
- Logger instance creation and reuse
- Level and format of configured output
- Copying records to a log file
"""
import logging

from core.utils.logging import configure_logging, get_logger


def test_get_logger_returns_named_logger():
    """Test that get_logger returns a logger instance.

    This test verifies that:
    1. The function returns a valid logging.Logger instance
    2. The same name returns the same instance
    3. Different names return different instances
    """
    logger = get_logger("test_logger")
    assert isinstance(logger, logging.Logger)
    assert logger.name == "test_logger"
    assert get_logger("test_logger") is logger
    assert get_logger("test_logger_2") is not logger


def test_configure_logging_level_and_format(capsys):
    """Test configured stream output.

    This test verifies that:
    1. Records below the level are dropped
    2. Emitted lines carry the logger name and level
    """
    configure_logging("WARNING")
    logger = get_logger("core.test")
    logger.info("quiet")
    logger.warning("loud")
    err = capsys.readouterr().err
    assert "quiet" not in err
    assert "core.test - WARNING - loud" in err


def test_configure_logging_file(tmp_path, capsys):
    """Test the log file copy.

    This test verifies that:
    1. Missing parent directories are created
    2. Records reach the file as well as the stream
    """
    log_file = tmp_path / "logs" / "run.log"
    configure_logging("INFO", log_file)
    get_logger("core.test").info("to file")
    for handler in logging.getLogger().handlers:
        handler.flush()
    assert "to file" in log_file.read_text()
    assert "to file" in capsys.readouterr().err
    configure_logging("INFO")
