import logging
import os
import sys
from typing import Optional

# Every module logs through logging.getLogger(__name__), i.e. below "src"
LOGGER_NAME = "src"
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logger(level: Optional[str] = None, log_file: Optional[str] = None) -> logging.Logger:
    """
    Configures and returns the package logger.

    Console output goes to stderr; stdout is reserved for JSON/CSV results.

    Args:
        level: Log level name (default: AMD_LOG_LEVEL or INFO)
        log_file: Optional log file path (default: AMD_LOG_FILE, unset = no file)
    """
    logger = logging.getLogger(LOGGER_NAME)
    level_name = (level or os.getenv("AMD_LOG_LEVEL") or "INFO").upper()
    logger.setLevel(getattr(logging, level_name, logging.INFO))
    log_file = log_file or os.getenv("AMD_LOG_FILE")

    if not logger.handlers:
        c_handler = logging.StreamHandler(sys.stderr)
        c_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(c_handler)

        if log_file:
            f_handler = logging.FileHandler(log_file)
            f_handler.setFormatter(logging.Formatter(LOG_FORMAT))
            logger.addHandler(f_handler)

    for handler in logger.handlers:
        handler.setLevel(logger.level)

    return logger
