"""
Monte-Carlo falsification of reach-set over-approximations.

Random admissible trajectories are integrated on the same RK4 grid as the
ellipsoids and the largest quadratic form per snapshot is reported. A value
above 1 + tol locates a trajectory that escapes the claimed set.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from models.ellipsoid import Ellipsoid, normalized_distance, project
from models.system import LtvSystem, TimeGrid, UncertaintySpec, sample_trajectories
from utils.logging_utils import get_logger

logger = get_logger("containment")

DEFAULT_CHECK_TOL = 1e-3


@dataclass
class SnapshotCheck:
    time: float
    max_form: float
    worst_sample: int
    worst_set: int


@dataclass
class ContainmentVerdict:
    """Per-snapshot maxima of the quadratic form over all samples and sets."""
    tol: float
    samples: int
    snapshots: List[SnapshotCheck] = field(default_factory=list)

    @property
    def max_form(self) -> float:
        return max(s.max_form for s in self.snapshots)

    @property
    def passed(self) -> bool:
        return self.max_form <= 1.0 + self.tol

    @property
    def violations(self) -> List[SnapshotCheck]:
        return [s for s in self.snapshots if s.max_form > 1.0 + self.tol]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "tol": self.tol,
            "samples": self.samples,
            "max_form": self.max_form,
            "snapshots": [vars(s).copy() for s in self.snapshots],
        }


def snapshot_grid(t_start: float, times: Sequence[float], step: float) -> TimeGrid:
    """
    Grid from ``t_start`` to the last time with ``times`` as snapshot nodes.

    Raises:
        ValueError: a time does not fall on a node of the step
    """
    times = np.asarray(times, dtype=float)
    offsets = (times - t_start) / step
    indices = np.rint(offsets).astype(int)
    if np.any(np.abs(offsets - indices) > 1e-6):
        raise ValueError(f"Snapshot times are not on the grid of step {step:g}")
    return TimeGrid(t_start, float(times[-1]), step, tuple(int(i) for i in indices))


def check_containment(sys: LtvSystem, unc: UncertaintySpec, times: Sequence[float],
                      sets: Sequence[Sequence[Ellipsoid]], step: float, count: int = 2000,
                      seed: int = 0, coords: Optional[Sequence[int]] = None,
                      tol: float = DEFAULT_CHECK_TOL, t_start: Optional[float] = None,
                      mode: str = "interior") -> ContainmentVerdict:
    """
    Sample trajectories from ``unc`` and test them against ``sets[k]`` at ``times[k]``.

    Args:
        sys, unc: System and uncertainty the sets claim to cover
        times: Increasing snapshot times
        sets: Ellipsoids claimed to contain the reach set at each time; when
            ``coords`` is given they live in the projected coordinates
        step: RK4 step used for the trajectories
        count: Number of trajectories
        coords: Projection applied to trajectory states before testing
        tol: Pass threshold 1 + tol
        t_start: Initial time of the trajectories (defaults to the span start or 0)
    """
    if len(times) != len(sets):
        raise ValueError("Need one set family per snapshot time")
    if t_start is None:
        t_start = sys.span[0] if sys.span is not None else 0.0
    grid = snapshot_grid(t_start, times, step)
    path = sample_trajectories(sys, unc, grid, count, seed, mode=mode)
    lookup = {idx: k for k, idx in enumerate(grid.snapshot_indices)}

    verdict = ContainmentVerdict(tol=tol, samples=count)
    for time_k, family, offset in zip(times, sets, np.rint((np.asarray(times) - t_start) / step)):
        states = path.states[:, lookup[int(offset)], :]
        if coords is not None:
            states = states[:, list(coords)]
        worst, worst_sample, worst_set = -np.inf, -1, -1
        for j, e in enumerate(family):
            e = e if coords is None or e.dim == states.shape[1] else project(e, coords)
            forms = normalized_distance(e, states)
            i = int(np.argmax(forms))
            if forms[i] > worst:
                worst, worst_sample, worst_set = float(forms[i]), i, j
        verdict.snapshots.append(SnapshotCheck(float(time_k), worst, worst_sample, worst_set))

    if verdict.passed:
        logger.info("Containment holds: max form %.6f over %d samples", verdict.max_form, count)
    else:
        for v in verdict.violations:
            logger.warning("Containment violated at t=%g: form %.6f (sample %d, set %d)",
                           v.time, v.max_form, v.worst_sample, v.worst_set)
    return verdict
