"""
Configuration, system description and result file handling for anytime-reach.
"""

from .config_loader import RunConfig, apply_overrides, load_run_config
from .system_loader import load_system, parse_system

__all__ = [
    'RunConfig',
    'apply_overrides',
    'load_run_config',
    'load_system',
    'parse_system'
]
