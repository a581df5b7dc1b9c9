"""
Utility functions for logging.
"""
import logging

ROOT_LOGGER_NAME = "anytime_reach"


def setup_logger(name: str = ROOT_LOGGER_NAME, level: int = logging.INFO) -> logging.Logger:
    """
    Sets up and returns a logger with a standard format.

    Library modules log through children of this logger, so configuring
    it once from a script configures the whole package.
    """
    logger = logging.getLogger(name)
    if not logger.hasHandlers():
        handler = logging.StreamHandler()
        formatter = logging.Formatter('[%(asctime)s] %(levelname)s: %(message)s')
        handler.setFormatter(formatter)
        logger.addHandler(handler)
    logger.setLevel(level)
    return logger


def get_logger(component: str) -> logging.Logger:
    """
    Return the package logger for one component (e.g. "fusion").

    Args:
        component: Short component name appended to the package logger name

    Returns:
        Child logger ``anytime_reach.<component>``
    """
    return logging.getLogger(f"{ROOT_LOGGER_NAME}.{component}")
