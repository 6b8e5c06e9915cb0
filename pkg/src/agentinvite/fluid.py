"""Fluid-limit trajectories in centered coordinates.

Two right-hand sides are provided: the boundary-free switched system and
the bounded system, where ``x`` is reflected at ``-lambda (1 - alpha) / beta``
(the image of ``X = 0``).  Integration is classical fixed-step RK4; in the
bounded case ``x`` is projected back onto the admissible half-space after
every step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import FluidState, ModelParams, SimState, Trajectory, to_centered, uniform_grid


class DivergenceError(ArithmeticError):
    def __init__(self, t: float):
        super().__init__(f"divergence (non-finite state) at t={t:g}")
        self.t = t


class AdmissibilityError(ValueError):
    pass


@dataclass(frozen=True)
class FluidConfig:
    dt: float = 1e-3
    T: float = 100.0
    bounded: bool = True
    conv_tol: float = 1e-3
    conv_window: float = 10.0

    def __post_init__(self):
        if not (self.dt > 0 and self.T > 0 and self.conv_tol > 0 and self.conv_window > 0):
            raise ValueError("dt, T, conv_tol and conv_window must be positive")
        if self.dt > self.T or self.conv_window > self.T:
            raise ValueError("dt and conv_window must not exceed T")


def boundary_tolerance(boundary: float) -> float:
    return 1e-9 * (1.0 + abs(boundary))


def _param_vector(params: ModelParams) -> np.ndarray:
    return np.array(
        [params.alpha, params.beta, params.mu, params.delta, params.theta, params.gamma, params.epsilon]
    )


@njit(cache=True)
def _rhs(x, y, v, p):
    a, b, m, d, th, g, e = p[0], p[1], p[2], p[3], p[4], p[5], p[6]
    ypos = y if y > 0.0 else 0.0
    yneg = -y if y < 0.0 else 0.0
    dy = b * x + a * m * (v - ypos) + d * yneg - th * ypos
    dv = b * x - (1.0 - a) * m * (v - ypos) - th * ypos
    dx = -g * dy - e * y
    return dx, dy, dv


@njit(cache=True)
def _rhs_clipped(x, y, v, p, bnd, snap):
    dx, dy, dv = _rhs(x, y, v, p)
    if x - bnd < snap and dx < 0.0:
        dx = 0.0
    return dx, dy, dv


@njit(cache=True)
def _rk4(u0, p, dt, nsteps, bounded, bnd, snap):
    out = np.empty((nsteps + 1, 3))
    out[0, 0], out[0, 1], out[0, 2] = u0[0], u0[1], u0[2]
    x, y, v = u0[0], u0[1], u0[2]
    contacts = 0
    h2 = 0.5 * dt
    for n in range(nsteps):
        if bounded:
            k1x, k1y, k1v = _rhs_clipped(x, y, v, p, bnd, snap)
            k2x, k2y, k2v = _rhs_clipped(x + h2 * k1x, y + h2 * k1y, v + h2 * k1v, p, bnd, snap)
            k3x, k3y, k3v = _rhs_clipped(x + h2 * k2x, y + h2 * k2y, v + h2 * k2v, p, bnd, snap)
            k4x, k4y, k4v = _rhs_clipped(x + dt * k3x, y + dt * k3y, v + dt * k3v, p, bnd, snap)
        else:
            k1x, k1y, k1v = _rhs(x, y, v, p)
            k2x, k2y, k2v = _rhs(x + h2 * k1x, y + h2 * k1y, v + h2 * k1v, p)
            k3x, k3y, k3v = _rhs(x + h2 * k2x, y + h2 * k2y, v + h2 * k2v, p)
            k4x, k4y, k4v = _rhs(x + dt * k3x, y + dt * k3y, v + dt * k3v, p)
        x = x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        y = y + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        v = v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        if bounded:
            if x < bnd:
                x = bnd
            if x - bnd < snap:
                contacts += 1
        if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(v)):
            return out, contacts, n + 1
        out[n + 1, 0], out[n + 1, 1], out[n + 1, 2] = x, y, v
    return out, contacts, -1


def rhs_unbounded(s: FluidState, params: ModelParams) -> FluidState:
    """Time derivative of the boundary-free system."""
    return FluidState(*_rhs(s.x, s.y, s.v, _param_vector(params)))


def rhs_bounded(s: FluidState, params: ModelParams) -> FluidState:
    """Time derivative with reflection: on the boundary, ``x'`` is clipped at zero from below."""
    bnd = params.x_boundary
    snap = boundary_tolerance(bnd)
    if s.x < bnd - snap:
        raise AdmissibilityError("state outside admissible region")
    return FluidState(*_rhs_clipped(s.x, s.y, s.v, _param_vector(params), bnd, snap))


def integrate(s0: FluidState, params: ModelParams, cfg: FluidConfig = FluidConfig()) -> Trajectory:
    """Integrate from ``s0`` on the grid ``0, dt, ..., T``.

    The returned trajectory carries ``meta["boundary_contacts"]``, the
    number of steps that ended on the reflecting boundary.

    Raises
    ------
    AdmissibilityError
        If ``cfg.bounded`` and ``s0`` lies below the boundary.
    DivergenceError
        If the state becomes non-finite.
    """
    grid = uniform_grid(cfg.T, cfg.dt)
    bnd = params.x_boundary
    snap = boundary_tolerance(bnd)
    if cfg.bounded and s0.x < bnd - snap:
        raise AdmissibilityError("state outside admissible region")
    u0 = s0.as_array()
    if cfg.bounded:
        u0[0] = max(u0[0], bnd)
    states, contacts, blowup = _rk4(u0, _param_vector(params), cfg.dt, len(grid) - 1, cfg.bounded, bnd, snap)
    if blowup >= 0:
        raise DivergenceError(float(grid[blowup]))
    kind = "fluid-bounded" if cfg.bounded else "fluid-unbounded"
    return Trajectory(grid, states, kind, meta={"boundary_contacts": int(contacts), "x_boundary": bnd})


@dataclass(frozen=True)
class Convergence:
    converged: bool
    t_conv: float | None
    final_norm: float


def detect_convergence(traj: Trajectory, cfg: FluidConfig = FluidConfig()) -> Convergence:
    norms = traj.norms()
    grid = traj.grid
    window = grid >= grid[-1] - cfg.conv_window - 1e-9 * max(1.0, grid[-1])
    converged = bool(np.all(norms[window] < cfg.conv_tol))
    outside = np.flatnonzero(norms >= cfg.conv_tol)
    if len(outside) == 0:
        t_conv = float(grid[0])
    elif outside[-1] + 1 < len(grid):
        t_conv = float(grid[outside[-1] + 1])
    else:
        t_conv = None
    return Convergence(converged, t_conv if converged else None, float(norms[-1]))


@dataclass(frozen=True)
class DecayEnvelope:
    C: float
    a: float


def decay_envelope(traj: Trajectory) -> DecayEnvelope | None:
    """Fit ``||u(t)|| ~ C exp(-a t) ||u(0)||`` by least squares on ``log ||u||``.

    Points below ``1e-12 ||u(0)||`` are dropped; they sit at the
    round-off floor and would flatten the fit.
    """
    norms = traj.norms()
    n0 = norms[0]
    if not n0 > 0:
        return None
    keep = norms > 1e-12 * n0
    if keep.sum() < 2:
        return None
    t = traj.grid[keep]
    logs = np.log(norms[keep] / n0)
    slope, intercept = np.polyfit(t, logs, 1)
    if not slope < -1e-12:
        return None
    return DecayEnvelope(C=float(np.exp(intercept)), a=float(-slope))


def fluid_from_raw(initial, params: ModelParams, cfg: FluidConfig = FluidConfig()) -> Trajectory:
    """Integrate from a raw ``(X, Y, Z)`` initial state."""
    X, Y, Z = (int(c) for c in list(initial)[:3])
    return integrate(to_centered(SimState(X, Y, Z), params), params, cfg)
