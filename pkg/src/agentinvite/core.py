"""Parameter and state types plus the centering transforms.

Raw process state is ``(X, Y, Z)``.  ``X`` counts pending agents, ``Y`` is
the agent queue minus the customer queue, ``Z`` counts pairs in service.  The fluid coordinates are the
r-scaled deviations of ``(X, Y, V)`` from the operating point, where
``V = Y+ + Z`` is the number of agents in the system.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable

import numpy as np

PARAM_NAMES = ("lambda", "r", "alpha", "beta", "mu", "delta", "theta", "gamma", "epsilon")

TRAJECTORY_KINDS = ("fluid-bounded", "fluid-unbounded", "sim-stylized", "sim-actual")


class ParameterError(ValueError):
    """Raised when a parameter set violates a model constraint."""


@dataclass(frozen=True)
class ModelParams:
    """Full parameter vector of the scaled system.

    ``lam`` is the per-unit arrival rate; the actual arrival rate is
    ``lam * r``.  Use :meth:`from_mapping` to build from the external
    key names (``lambda`` is a Python keyword).
    """

    lam: float
    r: int
    alpha: float
    beta: float
    mu: float
    delta: float
    theta: float
    gamma: float
    epsilon: float

    @property
    def arrival_rate(self) -> float:
        return self.lam * self.r

    @property
    def x_boundary(self) -> float:
        """Centered image of ``X = 0``."""
        return -self.lam * (1.0 - self.alpha) / self.beta

    def operating_point(self) -> OperatingPoint:
        return OperatingPoint(
            X_center=self.lam * self.r * (1.0 - self.alpha) / self.beta,
            Y_center=0.0,
            Z_center=self.lam * self.r / self.mu,
        )

    def with_(self, **changes) -> ModelParams:
        if "lambda" in changes:
            changes["lam"] = changes.pop("lambda")
        return replace(self, **changes)

    def as_dict(self) -> dict[str, float | int]:
        out: dict[str, float | int] = {}
        for f in fields(self):
            out["lambda" if f.name == "lam" else f.name] = getattr(self, f.name)
        return out

    @classmethod
    def from_mapping(cls, values: dict) -> ModelParams:
        unknown = set(values) - set(PARAM_NAMES)
        if unknown:
            raise ParameterError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
        missing = [k for k in PARAM_NAMES if k not in values]
        if missing:
            raise ParameterError(f"missing parameter(s): {', '.join(missing)}")
        r = values["r"]
        if isinstance(r, str):
            r = float(r)
        if float(r) != int(float(r)):
            raise ParameterError("r must be an integer >= 1")
        kwargs = {("lam" if k == "lambda" else k): float(values[k]) for k in PARAM_NAMES if k != "r"}
        return cls(r=int(float(r)), **kwargs)


def validate(params: ModelParams) -> ModelParams:
    """Return ``params`` unchanged, or raise on the first violated constraint."""
    checks = (
        ("lambda", params.lam > 0, "lambda must be positive"),
        ("r", isinstance(params.r, (int, np.integer)) and params.r >= 1, "r must be an integer >= 1"),
        ("alpha", 0.0 <= params.alpha < 1.0, "alpha must lie in [0,1)"),
        ("beta", params.beta > 0, "beta must be positive"),
        ("mu", params.mu > 0, "mu must be positive"),
        ("delta", params.delta >= 0, "delta must be non-negative"),
        ("theta", params.theta >= 0, "theta must be non-negative"),
        ("gamma", params.gamma > 0, "gamma must be positive"),
        ("epsilon", params.epsilon > 0, "epsilon must be positive"),
    )
    for name, ok, message in checks:
        value = getattr(params, "lam" if name == "lambda" else name)
        # NaN fails every comparison above; also reject infinities
        if not ok or (isinstance(value, float) and not math.isfinite(value)):
            raise ParameterError(message)
    return params


@dataclass(frozen=True)
class OperatingPoint:
    X_center: float
    Y_center: float
    Z_center: float


@dataclass(frozen=True)
class FluidState:
    """Centered fluid coordinates."""

    x: float
    y: float
    v: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.v], dtype=float)

    @classmethod
    def from_array(cls, u: Iterable[float]) -> FluidState:
        x, y, v = (float(c) for c in u)
        return cls(x, y, v)


@dataclass(frozen=True)
class SimState:
    """Integer system state, with the real-valued target for the actual scheme.

    ``X_target`` is ``None`` under the stylized scheme.  ``t_last_y`` is the
    time of the most recent change of ``Y``; the actual scheme's target
    update integrates ``Y`` over the interval since then.
    """

    X: int
    Y: int
    Z: int
    X_target: float | None = None
    t: float = 0.0
    t_last_y: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if self.X < 0:
            raise ParameterError("X must be non-negative")
        if self.Z < 0:
            raise ParameterError("Z must be non-negative")
        if self.X_target is not None and self.X_target < 0:
            raise ParameterError("X_target must be non-negative")
        if self.t < 0:
            raise ParameterError("t must be non-negative")

    @property
    def V(self) -> int:
        return max(self.Y, 0) + self.Z


def to_centered(state: SimState, params: ModelParams) -> FluidState:
    op = params.operating_point()
    r = params.r
    return FluidState(
        (state.X - op.X_center) / r,
        state.Y / r,
        (state.V - op.Z_center) / r,
    )


def from_centered(state: FluidState, params: ModelParams) -> tuple[float, float, float]:
    """Map centered coordinates back to raw ``(X, Y, V)``."""
    op = params.operating_point()
    r = params.r
    return (r * state.x + op.X_center, r * state.y, r * state.v + op.Z_center)


def centered_array(raw: np.ndarray, params: ModelParams) -> np.ndarray:
    """Vectorized :func:`to_centered` on rows of raw ``(X, Y, Z)``."""
    raw = np.asarray(raw, dtype=float)
    op = params.operating_point()
    out = np.empty_like(raw[:, :3])
    out[:, 0] = (raw[:, 0] - op.X_center) / params.r
    out[:, 1] = raw[:, 1] / params.r
    out[:, 2] = (np.maximum(raw[:, 1], 0.0) + raw[:, 2] - op.Z_center) / params.r
    return out


def raw_array(centered: np.ndarray, params: ModelParams) -> np.ndarray:
    """Vectorized :func:`from_centered`; returns rows of ``(X, Y, V, Z)``."""
    centered = np.asarray(centered, dtype=float)
    op = params.operating_point()
    r = params.r
    X = r * centered[:, 0] + op.X_center
    Y = r * centered[:, 1]
    V = r * centered[:, 2] + op.Z_center
    return np.column_stack([X, Y, V, V - np.maximum(Y, 0.0)])


@dataclass
class Trajectory:
    """States sampled on a uniform time grid.

    ``states`` holds one row per grid point.  Simulation trajectories keep
    the raw integer process in ``raw`` (columns ``X, Y, Z, X_target``) and
    the centered version in ``states``; fluid trajectories leave ``raw``
    unset.
    """

    grid: np.ndarray
    states: np.ndarray
    kind: str
    raw: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.kind not in TRAJECTORY_KINDS:
            raise ValueError(f"unknown trajectory kind {self.kind!r}")
        if self.grid.ndim != 1 or len(self.grid) == 0:
            raise ValueError("grid must be a nonempty 1-d array")
        if len(self.states) != len(self.grid):
            raise ValueError("states length must equal grid length")
        if len(self.grid) > 1:
            steps = np.diff(self.grid)
            if np.any(steps <= 0):
                raise ValueError("grid must be strictly increasing")
            if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12 * max(1.0, self.grid[-1])):
                raise ValueError("grid spacing must be uniform")

    @property
    def dt(self) -> float:
        return float(self.grid[1] - self.grid[0]) if len(self.grid) > 1 else 0.0

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)

    def subsample(self, every: int) -> Trajectory:
        sl = slice(None, None, every)
        raw = None if self.raw is None else self.raw[sl]
        return Trajectory(self.grid[sl], self.states[sl], self.kind, raw, dict(self.meta))

    def on_grid(self, grid: np.ndarray) -> Trajectory:
        """Restrict to ``grid``, which must be a strided subset of this grid."""
        grid = np.asarray(grid, dtype=float)
        if len(grid) == len(self.grid) and np.allclose(grid, self.grid):
            return self
        if self.dt == 0 or len(grid) < 2:
            raise ValueError("cannot resample a single-point trajectory")
        ratio = (grid[1] - grid[0]) / self.dt
        every = int(round(ratio))
        if every < 1 or abs(ratio - every) > 1e-6:
            raise ValueError("target grid spacing is not a multiple of the trajectory spacing")
        sub = self.subsample(every)
        n = len(grid)
        if len(sub.grid) < n or not np.allclose(sub.grid[:n], grid, atol=1e-9 * max(1.0, grid[-1])):
            raise ValueError("target grid is not contained in the trajectory grid")
        raw = None if sub.raw is None else sub.raw[:n]
        return Trajectory(sub.grid[:n], sub.states[:n], sub.kind, raw, sub.meta)

    def until(self, t_end: float) -> Trajectory:
        n = int(np.searchsorted(self.grid, t_end + 1e-9 * max(1.0, t_end), side="right"))
        raw = None if self.raw is None else self.raw[:n]
        return Trajectory(self.grid[:n], self.states[:n], self.kind, raw, dict(self.meta))


def uniform_grid(T: float, dt: float) -> np.ndarray:
    n = int(round(T / dt))
    if n < 1 or abs(n * dt - T) > 1e-9 * max(1.0, T):
        raise ParameterError("T must be a positive integer multiple of the step")
    return np.arange(n + 1) * dt


def parse_params_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in PARAM_NAMES:
            raise ParameterError(f"line {lineno}: unknown parameter {key!r}")
        if key in values:
            raise ParameterError(f"line {lineno}: duplicate parameter {key!r}")
        try:
            float(value)
        except ValueError:
            raise ParameterError(f"line {lineno}: {key} is not a number: {value!r}") from None
        values[key] = value
    return values


def load_params(path: str | Path, overrides: dict[str, str] | None = None) -> ModelParams:
    values = parse_params_text(Path(path).read_text())
    values.update(overrides or {})
    return validate(ModelParams.from_mapping(values))


def format_params(params: ModelParams) -> str:
    return "".join(f"{k} = {v!r}\n" for k, v in params.as_dict().items())
