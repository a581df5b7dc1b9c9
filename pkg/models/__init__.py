"""
Ellipsoids, linear time-varying systems and their uncertainty sets.
"""

from .ellipsoid import Ellipsoid, QuadraticForm, contains, project, support, volume
from .system import EllipsoidalSignal, LtvSystem, TimeGrid, UncertaintySpec

__all__ = [
    'Ellipsoid',
    'QuadraticForm',
    'contains',
    'project',
    'support',
    'volume',
    'EllipsoidalSignal',
    'LtvSystem',
    'TimeGrid',
    'UncertaintySpec'
]
