"""
Readers and writers for result files.

JSON files carry full objects; CSV files are flat tables written with
pandas using 17 significant digits so every float round-trips exactly.
"""
import json
from pathlib import Path
import re
from typing import Any, Dict, List, Sequence, Union

import numpy as np
import pandas as pd

from algorithms.anytime import AnytimeReport, TimingModel, TimingSample
from algorithms.fusion import FusionResult
from algorithms.propagation import ReachSnapshot
from utils.errors import ConfigError

FLOAT_FORMAT = "%.17g"
REPORT_COLUMNS = ["k", "t_available", "N_hat", "N_max", "wall_s", "volume", "certified"]
TIMING_COLUMNS = ["n_directions", "t_center", "t_shape", "t_opt", "t_propagation", "t_total", "workers"]

PathLike = Union[str, Path]


def _write_json(data: Any, path: PathLike) -> None:
    with open(path, "w") as f:
        json.dump(data, f, indent=2)


def _read_json(path: PathLike) -> Any:
    try:
        with open(path) as f:
            return json.load(f)
    except OSError as exc:
        raise ConfigError(f"Cannot read '{path}': {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Malformed JSON in '{path}': {exc}") from exc


def _is_csv(path: PathLike) -> bool:
    return Path(path).suffix.lower() == ".csv"


def _snapshots_to_frame(snapshots: Sequence[ReachSnapshot]) -> pd.DataFrame:
    """One row per snapshot: t, xc_<j>, X<i>_<r>_<c>, l<i>_<r>."""
    rows = []
    for snap in snapshots:
        row = {"t": snap.time}
        row.update({f"xc_{j}": v for j, v in enumerate(snap.center)})
        for i, shape in enumerate(snap.shapes):
            row.update({f"X{i}_{r}_{c}": shape[r, c]
                        for r in range(shape.shape[0]) for c in range(shape.shape[1])})
        for i, direction in enumerate(snap.directions):
            row.update({f"l{i}_{r}": v for r, v in enumerate(direction)})
        rows.append(row)
    return pd.DataFrame(rows)


def _snapshots_from_frame(df: pd.DataFrame) -> List[ReachSnapshot]:
    n = sum(1 for c in df.columns if re.fullmatch(r"xc_\d+", c))
    count = sum(1 for c in df.columns if re.fullmatch(r"X\d+_0_0", c))
    if n == 0 or count == 0 or "t" not in df.columns:
        raise ConfigError("Snapshot table needs columns t, xc_*, X*_*_*")
    snapshots = []
    for _, row in df.iterrows():
        center = np.array([row[f"xc_{j}"] for j in range(n)], dtype=float)
        shapes = [np.array([[row[f"X{i}_{r}_{c}"] for c in range(n)] for r in range(n)], dtype=float)
                  for i in range(count)]
        directions = []
        for i in range(count):
            keys = [f"l{i}_{r}" for r in range(n)]
            if all(k in df.columns for k in keys):
                directions.append(np.array([row[k] for k in keys], dtype=float))
            else:
                directions.append(np.full(n, np.nan))
        snapshots.append(ReachSnapshot(float(row["t"]), center, shapes, directions))
    return snapshots


def write_snapshots(snapshots: Sequence[ReachSnapshot], path: PathLike) -> None:
    """JSON list of snapshots, or the flat table when ``path`` ends in .csv."""
    if _is_csv(path):
        _snapshots_to_frame(snapshots).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    else:
        _write_json([s.to_dict() for s in snapshots], path)


def read_snapshots(path: PathLike) -> List[ReachSnapshot]:
    """
    Raises:
        ConfigError: unreadable, malformed or empty file
    """
    try:
        if _is_csv(path):
            try:
                df = pd.read_csv(path, float_precision="round_trip")
            except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
                raise ConfigError(f"Cannot read snapshot table '{path}': {exc}") from exc
            snapshots = _snapshots_from_frame(df)
        else:
            data = _read_json(path)
            if not isinstance(data, list):
                raise ConfigError(f"Snapshot file '{path}' must hold a JSON list")
            snapshots = [ReachSnapshot.from_dict(d) for d in data]
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"Invalid snapshot file '{path}': {exc}") from exc
    if not snapshots:
        raise ConfigError(f"Snapshot file '{path}' holds no snapshots")
    return snapshots


def write_fused_tube(times: Sequence[float], results: Sequence[FusionResult], path: PathLike) -> None:
    """JSON list of {"t", FusionResult fields}."""
    _write_json([{"t": float(t), **r.to_dict()} for t, r in zip(times, results)], path)


def read_fused_tube(path: PathLike):
    """
    Returns:
        (times, results)
    """
    data = _read_json(path)
    try:
        return [float(d["t"]) for d in data], [FusionResult.from_dict(d) for d in data]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"Invalid fused tube file '{path}': {exc}") from exc


def write_timings(samples: Sequence[TimingSample], path: PathLike) -> None:
    df = pd.DataFrame([s.to_dict() for s in samples], columns=TIMING_COLUMNS)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT)


def read_timings(path: PathLike) -> List[TimingSample]:
    try:
        df = pd.read_csv(path, float_precision="round_trip")
        return [TimingSample(int(r.n_directions), float(r.t_center), float(r.t_shape), float(r.t_opt),
                             float(r.t_propagation), float(r.t_total), int(r.workers))
                for r in df.itertuples(index=False)]
    except (OSError, AttributeError, ValueError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise ConfigError(f"Invalid timing table '{path}': {exc}") from exc


def write_timing_model(model: TimingModel, path: PathLike) -> None:
    _write_json(model.to_dict(), path)


def read_timing_model(path: PathLike) -> TimingModel:
    data = _read_json(path)
    try:
        return TimingModel.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"Invalid timing model '{path}': {exc}") from exc


def report_to_frame(report: AnytimeReport) -> pd.DataFrame:
    return pd.DataFrame(report.rows(), columns=REPORT_COLUMNS)


def write_report(report: AnytimeReport, path: PathLike) -> None:
    """Full report as JSON, or the per-step table when ``path`` ends in .csv."""
    if _is_csv(path):
        report_to_frame(report).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    else:
        _write_json(report.to_dict(), path)


def read_report(path: PathLike) -> AnytimeReport:
    data = _read_json(path)
    try:
        return AnytimeReport.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"Invalid report file '{path}': {exc}") from exc


def read_trace(path: PathLike) -> List[float]:
    """
    One positive number of seconds per non-blank line.

    Raises:
        ConfigError: unreadable file, non-numeric or non-positive entry
    """
    try:
        with open(path) as f:
            lines = f.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"Cannot read availability trace '{path}': {exc}") from exc
    trace = []
    for number, line in enumerate(lines, start=1):
        text = line.strip()
        if not text:
            continue
        try:
            value = float(text)
        except ValueError as exc:
            raise ConfigError(f"{path}:{number}: '{text}' is not a number") from exc
        if not (np.isfinite(value) and value > 0.0):
            raise ConfigError(f"{path}:{number}: availability must be positive, got {text}")
        trace.append(value)
    if not trace:
        raise ConfigError(f"Availability trace '{path}' is empty")
    return trace


def write_summary(summary: Dict[str, Any], path: PathLike) -> None:
    _write_json(summary, path)
