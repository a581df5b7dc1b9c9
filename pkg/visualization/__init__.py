"""
Visualization package for anytime-reach.
"""

from .tube_plotter import plot_reach_tube, save_reach_tube

__all__ = [
    'plot_reach_tube',
    'save_reach_tube'
]
