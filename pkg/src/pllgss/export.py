"""CSV/JSON writers with fixed float formatting.

Every number goes through :func:`fmt` / :func:`rounded`, so identical inputs
give byte-identical files.
"""

from __future__ import annotations

import enum
import json
import math
from pathlib import Path

import numpy as np

from .roa import Boundary, ClassificationGrid
from .sim import Trajectory

FULL = "full"


def fmt(value: float, precision: str = "6") -> str:
    v = float(value)
    if not math.isfinite(v):
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if precision == FULL:
        return repr(v)
    out = f"{v:.{int(precision)}g}"
    return "0" if out == "-0" else out


def rounded(obj, precision: str = "6"):
    """Recursively convert to JSON-ready types, rounding floats."""
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return None
        return float(fmt(v, precision))
    if isinstance(obj, complex):
        return [rounded(obj.real, precision), rounded(obj.imag, precision)]
    if isinstance(obj, np.ndarray):
        return rounded(obj.tolist(), precision)
    if isinstance(obj, dict):
        return {str(k): rounded(v, precision) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [rounded(v, precision) for v in obj]
    return obj


def dumps(obj, precision: str = "6") -> str:
    return json.dumps(rounded(obj, precision), indent=2) + "\n"


def write_json(path: Path, obj, precision: str = "6") -> None:
    Path(path).write_text(dumps(obj, precision))


def trajectory_csv(traj: Trajectory, precision: str = "6") -> str:
    lines = [",".join(traj.columns)]
    lines += [f"# event,{fmt(t, precision)},{label}" for t, label in traj.events]
    lines += [f"{fmt(t, precision)},{fmt(a, precision)},{fmt(b, precision)}"
              for t, (a, b) in zip(traj.t, traj.y)]
    return "\n".join(lines) + "\n"


def boundaries_csv(boundaries: list[Boundary], precision: str = "6") -> str:
    lines = ["label,delta,x"]
    for b in boundaries:
        lines += [f"{b.label},{fmt(d, precision)},{fmt(x, precision)}" for d, x in b.points]
    return "\n".join(lines) + "\n"


def grid_csv(grid: ClassificationGrid, precision: str = "6") -> str:
    lines = ["delta,x,label"]
    for (d, x), lab in zip(grid.points(), grid.flat_labels()):
        lines.append(f"{fmt(d, precision)},{fmt(x, precision)},{lab}")
    return "\n".join(lines) + "\n"


def read_trajectory_csv(path) -> tuple[list[str], np.ndarray, list[tuple[float, str]]]:
    """Parse a trajectory CSV back into (columns, data, events)."""
    events, rows, header = [], [], None
    for line in Path(path).read_text().splitlines():
        if line.startswith("# event,"):
            _, t, label = line.split(",", 2)
            events.append((float(t), label))
        elif header is None:
            header = line.split(",")
        elif line:
            rows.append([float(v) for v in line.split(",")])
    return header, np.array(rows), events
