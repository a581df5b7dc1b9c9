"""
System and uncertainty loader.
Builds an LtvSystem and its UncertaintySpec from the JSON system schema.

    {"n": 2, "m": 1, "p": 1,
     "A": {"constant": [[0, 1], [0, 0]]},
     "B": [[0], [1]],
     "G": {"times": [0, 1], "values": [[[0], [1]], [[0], [2]]]},
     "X0": {"center": [0, 0], "shape": [[1, 0], [0, 1]]},
     "U": {"center": [0], "shape": [[1]]},
     "W": {"center": [0], "shape": [[0.01]]}}

"U" and "W" may be omitted, which means a single point at the origin.
"""
import json
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from models.ellipsoid import Ellipsoid
from models.system import (
    ConstantFunction,
    EllipsoidalSignal,
    GridFunction,
    LtvSystem,
    TimeFunction,
    UncertaintySpec,
)
from utils.errors import ConfigError, ReachError

QUADROTOR_PRESET = "quadrotor"


def _parse_function(spec: Any, name: str) -> TimeFunction:
    """Matrix or vector given as a bare list, {"constant": ...} or {"times", "values"}."""
    if isinstance(spec, dict) and "constant" not in spec and not ("times" in spec and "values" in spec):
        raise ConfigError(f"'{name}' must hold 'constant' or 'times'/'values'")
    if not isinstance(spec, (dict, list, int, float)):
        raise ConfigError(f"Invalid '{name}': expected a list or an object")
    try:
        if isinstance(spec, dict) and "constant" not in spec:
            return GridFunction(spec["times"], spec["values"])
        value = spec["constant"] if isinstance(spec, dict) else spec
        return ConstantFunction(np.asarray(value, dtype=float))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"Invalid '{name}': {exc}") from exc


def _parse_signal(spec: Optional[Dict[str, Any]], size: int, name: str) -> EllipsoidalSignal:
    if spec is None:
        return EllipsoidalSignal.point(np.zeros(size))
    if not isinstance(spec, dict) or "center" not in spec or "shape" not in spec:
        raise ConfigError(f"'{name}' must be an object with 'center' and 'shape'")
    return EllipsoidalSignal(_parse_function(spec["center"], f"{name}.center"),
                             _parse_function(spec["shape"], f"{name}.shape"))


def _check_declared(data: Dict[str, Any], system: LtvSystem) -> None:
    for key in ("n", "m", "p"):
        if key in data and int(data[key]) != getattr(system, key):
            raise ConfigError(f"Declared {key}={data[key]} but matrices give {getattr(system, key)}")


def parse_system(data: Dict[str, Any]) -> Tuple[LtvSystem, UncertaintySpec]:
    """
    Build the system and uncertainty sets from a parsed JSON object.

    Raises:
        ConfigError: missing keys, malformed matrices or inconsistent dimensions
    """
    if not isinstance(data, dict):
        raise ConfigError("System description must be a JSON object")
    missing = [k for k in ("A", "B", "G", "X0") if k not in data]
    if missing:
        raise ConfigError(f"System description is missing {missing}")
    try:
        system = LtvSystem(_parse_function(data["A"], "A"), _parse_function(data["B"], "B"),
                           _parse_function(data["G"], "G"))
        _check_declared(data, system)
        x0 = data["X0"]
        if not isinstance(x0, dict):
            raise ConfigError("'X0' must be an object with 'center' and 'shape'")
        uncertainty = UncertaintySpec(
            x0=Ellipsoid(np.asarray(x0["center"], dtype=float), np.asarray(x0["shape"], dtype=float)),
            u=_parse_signal(data.get("U"), system.m, "U"),
            w=_parse_signal(data.get("W"), system.p, "W"),
        )
        span = system.span
        uncertainty.validate(system, span[0] if span is not None else 0.0)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, ReachError) as exc:
        raise ConfigError(f"Invalid system description: {exc}") from exc
    return system, uncertainty


def load_system(source: Union[str, Path, Dict[str, Any]]) -> Tuple[LtvSystem, UncertaintySpec]:
    """
    Load a system from a JSON file path or an already parsed object.

    Raises:
        ConfigError: unreadable file, invalid JSON or invalid description
    """
    if isinstance(source, dict):
        return parse_system(source)
    try:
        with open(source) as f:
            data = json.load(f)
    except OSError as exc:
        raise ConfigError(f"Cannot read system file '{source}': {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Malformed JSON in '{source}': {exc}") from exc
    return parse_system(data)


def system_to_dict(system: LtvSystem, uncertainty: UncertaintySpec, t: float = 0.0) -> Dict[str, Any]:
    """Constant-matrix JSON description of the system evaluated at ``t``."""
    a, b, g = system.evaluate(t)
    u_center, u_shape = uncertainty.u.at(t)
    w_center, w_shape = uncertainty.w.at(t)
    return {
        "n": system.n, "m": system.m, "p": system.p,
        "A": {"constant": a.tolist()},
        "B": {"constant": b.tolist()},
        "G": {"constant": g.tolist()},
        "X0": uncertainty.x0.to_dict(),
        "U": {"center": u_center.tolist(), "shape": u_shape.tolist()},
        "W": {"center": w_center.tolist(), "shape": w_shape.tolist()},
    }
