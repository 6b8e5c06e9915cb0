"""CSV and JSON writers with deterministic formatting."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import IO

import numpy as np

from ..core import ModelParams, Trajectory, raw_array


def _num(v: float) -> str:
    return repr(float(v))


def _count(v: float) -> str:
    return str(int(round(v)))


def write_fluid_csv(traj: Trajectory, params: ModelParams, stream: IO[str], coords: str = "centered") -> None:
    """``t,x,y,v`` in centered units, or ``t,X,Y,V,Z`` in raw units."""
    w = csv.writer(stream, lineterminator="\n")
    if coords == "centered":
        w.writerow(["t", "x", "y", "v"])
        for t, row in zip(traj.grid, traj.states):
            w.writerow([_num(t), *(_num(c) for c in row)])
    elif coords == "raw":
        w.writerow(["t", "X", "Y", "V", "Z"])
        for t, row in zip(traj.grid, raw_array(traj.states, params)):
            w.writerow([_num(t), *(_num(c) for c in row)])
    else:
        raise ValueError("coords must be 'centered' or 'raw'")


def write_sim_csv(traj: Trajectory, stream: IO[str], coords: str = "raw") -> None:
    """``t,X,Y,Z,Xtarget`` with integer counts, or ``t,x,y,v`` centered."""
    w = csv.writer(stream, lineterminator="\n")
    if coords == "centered":
        w.writerow(["t", "x", "y", "v"])
        for t, row in zip(traj.grid, traj.states):
            w.writerow([_num(t), *(_num(c) for c in row)])
        return
    if coords != "raw":
        raise ValueError("coords must be 'centered' or 'raw'")
    if traj.raw is None:
        raise ValueError("trajectory has no raw process")
    w.writerow(["t", "X", "Y", "Z", "Xtarget"])
    for t, row in zip(traj.grid, traj.raw):
        xt = "" if math.isnan(row[3]) else _num(row[3])
        w.writerow([_num(t), _count(row[0]), _count(row[1]), _count(row[2]), xt])


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default, allow_nan=True) + "\n"


def write_json(obj, path: Path) -> None:
    Path(path).write_text(dumps(obj))

