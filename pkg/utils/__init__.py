"""
Utilities package for anytime-reach: logging, errors, linear algebra, integration, sampling.
"""

from .logging_utils import get_logger, setup_logger
from .errors import ConfigError, NumericalError, ReachError

__all__ = [
    'get_logger',
    'setup_logger',
    'ConfigError',
    'NumericalError',
    'ReachError'
]
