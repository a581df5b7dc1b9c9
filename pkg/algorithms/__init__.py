"""
Reach-set propagation, ellipsoid fusion and deadline-aware supervision.
"""

from .propagation import DisturbanceModel, EllipsoidalReachPropagator, ReachSnapshot, propagate_family
from .fusion import FusionInput, FusionResult, fuse_common_center
from .anytime import AnytimeSupervisor, TimingModel, select_nmax
from .lq_tracking import LqTracking

__all__ = [
    'DisturbanceModel',
    'EllipsoidalReachPropagator',
    'ReachSnapshot',
    'propagate_family',
    'FusionInput',
    'FusionResult',
    'fuse_common_center',
    'AnytimeSupervisor',
    'TimingModel',
    'select_nmax',
    'LqTracking'
]
