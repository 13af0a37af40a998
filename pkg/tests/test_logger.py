"""Tests for logger module."""

import logging
from tcn_bench.logger import (
    attach_file_handler,
    detach_file_handler,
    logger,
    set_debug_mode,
    setup_logger,
)


class TestSetupLogger:
    """Tests for setup_logger function."""

    def test_default_logger(self):
        """Test creating logger with default settings."""
        test_logger = setup_logger("test_logger_default")
        assert test_logger is not None
        assert test_logger.level == logging.INFO
        assert len(test_logger.handlers) > 0

    def test_logger_with_debug(self):
        """Test creating logger with debug enabled."""
        test_logger = setup_logger("test_logger_debug", debug=True)
        assert test_logger.level == logging.DEBUG
        assert test_logger.handlers[0].level == logging.DEBUG

    def test_logger_avoids_duplicate_handlers(self):
        """Test that calling setup_logger twice doesn't add duplicate handlers."""
        test_logger = setup_logger("test_logger_duplicate")
        handler_count = len(test_logger.handlers)
        test_logger_again = setup_logger("test_logger_duplicate")
        assert len(test_logger_again.handlers) == handler_count

    def test_logger_handler_format(self):
        """Test that logger handler has correct formatter."""
        test_logger = setup_logger("test_logger_format")
        log_format = test_logger.handlers[0].formatter._fmt
        assert "levelname" in log_format
        assert "message" in log_format


class TestGlobalLogger:
    """Tests for global logger instance."""

    def test_global_logger_name(self):
        """Test global logger has correct name."""
        assert isinstance(logger, logging.Logger)
        assert logger.name == "tcn_bench"


class TestSetDebugMode:
    """Tests for set_debug_mode function."""

    def test_toggle_debug_mode(self):
        """Test toggling debug mode multiple times."""
        set_debug_mode(True)
        assert logger.level == logging.DEBUG
        for handler in logger.handlers:
            assert handler.level == logging.DEBUG

        set_debug_mode(False)
        assert logger.level == logging.INFO
        for handler in logger.handlers:
            assert handler.level == logging.INFO


class TestRunLogFile:
    """Tests for mirroring the logger into a run's log file."""

    def test_messages_reach_file(self, tmp_path):
        """Test that attached handler writes records and detaching stops it."""
        path = tmp_path / "train.log"
        handler = attach_file_handler(path)
        try:
            logger.info("step 1 done")
        finally:
            detach_file_handler(handler)
        logger.info("after detach")

        text = path.read_text()
        assert "INFO: step 1 done" in text
        assert "after detach" not in text
        assert handler not in logger.handlers
