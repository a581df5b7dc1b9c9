"""
Run configuration for the reachability commands.

A config file is one JSON object whose keys are the RunConfig fields; command
line flags override file values. The "system" key is either the preset name
"quadrotor" or an inline system description (see data.system_loader).
"""
from dataclasses import asdict, dataclass, field, fields
import json
import math
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from algorithms.propagation import DisturbanceModel
from data.system_loader import QUADROTOR_PRESET, parse_system
from models.ellipsoid import DEFAULT_CONTAINMENT_TOL
from models.quadrotor import QuadrotorCaseStudy, QuadrotorParams, build_case_study
from models.system import LtvSystem, TimeGrid, UncertaintySpec
from utils.errors import ConfigError

DEFAULT_HORIZON = 0.1
DEFAULT_STEPS_PER_HORIZON = 200


def _default_workers() -> int:
    return os.cpu_count() or 1


@dataclass
class RunConfig:
    """Knobs shared by every subcommand."""
    system: Union[str, Dict[str, Any]] = QUADROTOR_PRESET
    quadrotor: Dict[str, Any] = field(default_factory=dict)
    horizon: float = DEFAULT_HORIZON
    steps: int = 10
    step_size: Optional[float] = None
    t_start: float = 0.0
    t_end: Optional[float] = None
    snapshots: int = 10
    n_directions: int = 10
    n_cap: int = 10
    seed: int = 0
    coords: Optional[List[int]] = None
    workers: int = field(default_factory=_default_workers)
    disturbance_model: str = DisturbanceModel.ADDITIVE.value
    containment_tol: float = DEFAULT_CONTAINMENT_TOL
    fusion_tol: float = 1e-8
    max_iterations: int = 5000
    samples: int = 2000
    reps: int = 3
    trace: Optional[str] = None
    model: Optional[str] = None
    output: Optional[str] = None

    @property
    def h(self) -> float:
        """RK4 step; defaults to 1/200 of the prediction horizon."""
        return self.step_size if self.step_size is not None else self.horizon / DEFAULT_STEPS_PER_HORIZON

    @property
    def end_time(self) -> float:
        return self.t_end if self.t_end is not None else self.t_start + self.horizon * self.steps

    def grid(self) -> TimeGrid:
        """Propagation grid over [t_start, end_time] with ``snapshots`` snapshot nodes."""
        try:
            return TimeGrid.uniform(self.t_start, self.end_time, self.h, self.snapshots)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def validate(self) -> "RunConfig":
        """
        Check invariants.

        Raises:
            ConfigError: any value out of range
        """
        if not self.horizon > 0.0:
            raise ConfigError("horizon must be positive")
        if not self.h > 0.0:
            raise ConfigError("step_size must be positive")
        ratio = self.horizon / self.h
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ConfigError(f"step_size {self.h:g} does not divide the horizon {self.horizon:g}")
        if self.end_time <= self.t_start:
            raise ConfigError("t_end must be after t_start")
        for name, minimum in (("steps", 1), ("n_directions", 1), ("n_cap", 1), ("workers", 1),
                              ("snapshots", 2), ("max_iterations", 1), ("samples", 1), ("reps", 3)):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
                raise ConfigError(f"{name} must be an integer >= {minimum}, got {value!r}")
        for name in ("containment_tol", "fusion_tol"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ConfigError(f"{name} must be positive, got {value!r}")
        if self.coords is not None:
            if not self.coords or any(not isinstance(c, int) for c in self.coords):
                raise ConfigError("coords must be a non-empty list of integers")
        try:
            DisturbanceModel(self.disturbance_model)
        except ValueError as exc:
            raise ConfigError(f"Unknown disturbance model '{self.disturbance_model}'") from exc
        if not isinstance(self.system, (str, dict)):
            raise ConfigError("system must be a preset name or an inline description")
        if isinstance(self.system, str) and self.system != QUADROTOR_PRESET:
            raise ConfigError(f"Unknown system preset '{self.system}'")
        return self

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def config_from_dict(data: Dict[str, Any]) -> RunConfig:
    """Build and validate a RunConfig; unknown keys are rejected."""
    if not isinstance(data, dict):
        raise ConfigError("Config must be a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"Unknown config keys: {unknown}")
    try:
        config = RunConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return config.validate()


def load_run_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
    """
    Load a config file, or the defaults when ``path`` is None.

    Raises:
        ConfigError: unreadable file, malformed JSON or invalid values
    """
    if path is None:
        return RunConfig().validate()
    try:
        with open(path) as f:
            data = json.load(f)
    except OSError as exc:
        raise ConfigError(f"Cannot read config '{path}': {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Malformed JSON in config '{path}': {exc}") from exc
    return config_from_dict(data)


def apply_overrides(config: RunConfig, overrides: Dict[str, Any]) -> RunConfig:
    """Copy of ``config`` with every non-None override applied, re-validated."""
    data = config.to_dict()
    data.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_dict(data)


def build_system(config: RunConfig) -> Tuple[LtvSystem, UncertaintySpec, Optional[Tuple[int, ...]]]:
    """
    Materialize the configured system.

    Returns:
        (system, uncertainty, default projection coordinates of the preset or None)
    """
    if isinstance(config.system, dict):
        system, uncertainty = parse_system(config.system)
        return system, uncertainty, None

    study = build_quadrotor_study(config)
    return study.system, study.uncertainty, study.coords


def build_quadrotor_study(config: RunConfig) -> QuadrotorCaseStudy:
    """
    Quadrotor case study from the "quadrotor" options.

    "horizon" (default max(1, end_time)) and "intervals" (default 2000) size the
    tracking design; every other key overrides a QuadrotorParams field.
    """
    options = dict(config.quadrotor)
    horizon = float(options.pop("horizon", max(1.0, config.end_time)))
    intervals = int(options.pop("intervals", 2000))
    if config.end_time > horizon + 1e-12:
        raise ConfigError(f"Run ends at {config.end_time:g} beyond the tracking horizon {horizon:g}")
    params = QuadrotorParams.from_dict(options)
    try:
        study = build_case_study(params, horizon, intervals)
    except ValueError as exc:
        raise ConfigError(f"Invalid quadrotor settings: {exc}") from exc
    return study
