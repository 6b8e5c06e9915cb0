"""Experiment drivers: fluid-vs-simulation comparisons, presets, sweeps."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..core import ModelParams, SimState, Trajectory, format_params, to_centered, uniform_grid, validate
from ..fluid import FluidConfig, detect_convergence, integrate
from ..simulator import SimConfig, compare_to_fluid, initial_vector, run
from ..stability import condition_i, condition_ii, cqlf_exists, build_matrices, stability_report
from . import io
from .presets import default_battery, get_preset

DEFAULT_REPS = 20
SIM_TOL = 0.3


def fluid_start(initial: SimState, params: ModelParams, scheme: str):
    """Centered fluid initial state matching a simulation start.

    Under the actual scheme the invitations owed at time zero are counted,
    so the fluid starts from ``X = max(X, ceil(X_target))``.
    """
    vec = initial_vector(initial, scheme)
    return to_centered(SimState(int(vec[0]), int(vec[1]), int(vec[2])), params)


def fluid_summary(traj: Trajectory, cfg: FluidConfig) -> dict:
    conv = detect_convergence(traj, cfg)
    return {
        "kind": traj.kind,
        "converged": conv.converged,
        "t_conv": conv.t_conv,
        "final_norm": conv.final_norm,
        "boundary_contacts": traj.meta.get("boundary_contacts", 0),
    }


def trailing_max_norm(traj: Trajectory, window: float) -> float:
    mask = traj.grid >= traj.grid[-1] - window - 1e-9 * max(1.0, traj.grid[-1])
    return float(traj.norms()[mask].max())


def target_gap(traj: Trajectory) -> dict:
    """Statistics of ``X - X_target`` after time zero (actual scheme only)."""
    raw = traj.raw[1:]
    gap = raw[:, 0] - raw[:, 3]
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(raw[:, 0] > 0, gap / raw[:, 0], 0.0)
    return {
        "max": float(gap.max()),
        "median": float(np.median(gap)),
        "median_relative": float(np.median(rel)),
        "min": float(gap.min()),
    }


def _run_one(args):
    cfg, params = args
    return run(cfg, params)


def run_replications(cfg: SimConfig, params: ModelParams, reps: int, workers: int = 1) -> list[Trajectory]:
    jobs = [(replace(cfg, replication=i), params) for i in range(reps)]
    if workers > 1 and reps > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_one, jobs))
    return [_run_one(j) for j in jobs]


@dataclass
class ComparisonRun:
    fluid: Trajectory
    sims: list[Trajectory]
    report: dict
    fluid_unbounded: Trajectory | None = None


def compare(
    params: ModelParams,
    initial: SimState,
    *,
    scheme: str = "stylized",
    T: float = 50.0,
    dt: float = 1e-3,
    sample_dt: float = 0.1,
    seed: int = 0,
    reps: int = DEFAULT_REPS,
    bounded: bool = True,
    conv_tol: float = 1e-3,
    conv_window: float = 10.0,
    sim_tol: float = SIM_TOL,
    target_convention: str = "before",
    with_unbounded: bool = False,
    workers: int = 1,
) -> ComparisonRun:
    """Integrate the fluid limit and run ``reps`` simulations from the same start.

    Distances are centered sup-distances over the sample grid; the report
    gives their median across replications.
    """
    validate(params)
    fcfg = FluidConfig(dt=dt, T=T, bounded=bounded, conv_tol=conv_tol, conv_window=min(conv_window, T))
    s0 = fluid_start(initial, params, scheme)
    fluid = integrate(s0, params, fcfg)
    grid = uniform_grid(T, sample_dt)
    fluid_coarse = fluid.on_grid(grid)
    report: dict = {
        "scheme": scheme,
        "horizon": T,
        "dt": dt,
        "sample_dt": sample_dt,
        "seed": seed,
        "reps": reps,
        "initial": {"X": initial.X, "Y": initial.Y, "Z": initial.Z, "X_target": initial.X_target},
        "fluid_initial": [s0.x, s0.y, s0.v],
        "fluid": fluid_summary(fluid, fcfg),
    }
    report["converged"] = report["fluid"]["converged"]
    unbounded = None
    if with_unbounded:
        ucfg = replace(fcfg, bounded=False)
        unbounded = integrate(s0, params, ucfg)
        report["fluid_unbounded"] = fluid_summary(unbounded, ucfg)
        report["fluid_unbounded"]["sup_dist_to_bounded"] = float(
            np.linalg.norm(unbounded.states - fluid.states, axis=1).max()
        )

    sims: list[Trajectory] = []
    if reps > 0:
        scfg = SimConfig(T=T, sample_dt=sample_dt, seed=seed, scheme=scheme, initial=initial,
                         target_convention=target_convention)
        sims = run_replications(scfg, params, reps, workers)
        comps = [compare_to_fluid(s, fluid_coarse) for s in sims]
        sups = [c.sup_dist for c in comps]
        trailing = [trailing_max_norm(s, fcfg.conv_window) for s in sims]
        sim_report = {
            "sup_dists": sups,
            "median_sup_dist": float(np.median(sups)),
            "median_per_component": [float(v) for v in np.median([c.per_component for c in comps], axis=0)],
            "median_trailing_norm": float(np.median(trailing)),
            "converged": bool(np.median(trailing) < sim_tol),
            "sim_tol": sim_tol,
            "events_total": int(sum(s.meta["events"] for s in sims)),
            "violations": int(sum(s.meta["violations"] for s in sims)),
        }
        if scheme == "actual":
            gaps = [target_gap(s) for s in sims]
            sim_report["target_gap"] = {
                k: float(np.median([g[k] for g in gaps])) for k in ("max", "median", "median_relative", "min")
            }
        report["simulation"] = sim_report
    return ComparisonRun(fluid, sims, report, unbounded)


def run_example(
    preset_id: str,
    out_dir: str | Path | None = None,
    *,
    reps: int = DEFAULT_REPS,
    seed: int = 0,
    sample_dt: float = 0.1,
    dt: float = 1e-3,
    workers: int = 1,
) -> dict:
    """Run a preset end to end and, if ``out_dir`` is given, write its artifacts there.

    Files: ``params.txt``, ``stability.json``, ``fluid.csv`` (centered, on
    the sample grid), ``sim.csv`` (replication 0, raw counts),
    ``report.json`` and, for presets comparing against the boundary-free
    system, ``fluid_unbounded.csv``.
    """
    preset = get_preset(preset_id)
    stab = stability_report(preset.params)
    res = compare(
        preset.params,
        preset.initial,
        scheme=preset.scheme,
        T=preset.horizon,
        dt=dt,
        sample_dt=sample_dt,
        seed=seed,
        reps=reps,
        with_unbounded=preset.compare_unbounded,
        workers=workers,
    )
    report = {
        "id": preset.id,
        "description": preset.description,
        "source": preset.source,
        "params": preset.params.as_dict(),
        "stability": {k: stab.to_dict()[k] for k in ("cond_i", "cond_ii", "cqlf_exists", "a2_hurwitz")},
        **res.report,
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "params.txt").write_text(format_params(preset.params))
        io.write_json(stab.to_dict(), out / "stability.json")
        grid = uniform_grid(preset.horizon, sample_dt)
        with open(out / "fluid.csv", "w", newline="") as fh:
            io.write_fluid_csv(res.fluid.on_grid(grid), preset.params, fh)
        if res.fluid_unbounded is not None:
            with open(out / "fluid_unbounded.csv", "w", newline="") as fh:
                io.write_fluid_csv(res.fluid_unbounded.on_grid(grid), preset.params, fh)
        if res.sims:
            with open(out / "sim.csv", "w", newline="") as fh:
                io.write_sim_csv(res.sims[0], fh)
        io.write_json(report, out / "report.json")
    return report


@dataclass
class SweepResult:
    param: str
    values: list[float]
    rows: list[dict] = field(default_factory=list)
    counterexamples: list[dict] = field(default_factory=list)

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("sweep grid must be strictly increasing")

    def to_dict(self) -> dict:
        return {
            "param": self.param,
            "values": list(self.values),
            "rows": self.rows,
            "counterexamples": self.counterexamples,
        }

    CSV_COLUMNS = ("value", "cond_i", "cond_ii", "cqlf_exists", "fluid_converged", "sim_converged", "verdict")

    def csv_rows(self) -> list[list[str]]:
        out = []
        for row in self.rows:
            out.append(["" if row.get(c) is None else str(row.get(c)) for c in self.CSV_COLUMNS])
        return out


SWEEPABLE = ("gamma", "epsilon")


DECAY_RATIO = 0.9


def fluid_status(traj: Trajectory, cfg: FluidConfig) -> str:
    """``converged``, ``decaying`` or ``persistent``.

    A trajectory that has not converged counts as decaying when the max norm
    over the last quarter of the horizon is below ``DECAY_RATIO`` times the
    max over the quarter before it.
    """
    if detect_convergence(traj, cfg).converged:
        return "converged"
    norms, grid = traj.norms(), traj.grid
    q = grid[-1] / 4
    last = norms[grid >= grid[-1] - q].max()
    prev = norms[(grid >= grid[-1] - 2 * q) & (grid < grid[-1] - q)].max()
    return "decaying" if last < DECAY_RATIO * prev else "persistent"


def _verdict(local: bool, statuses: list[str]) -> str:
    converged = all(s == "converged" for s in statuses)
    if local:
        if converged:
            return "consistent"
        return "counterexample" if "persistent" in statuses else "inconclusive"
    return "sufficient-only" if converged else "not-converged"


def sweep(
    params: ModelParams,
    param: str,
    values,
    *,
    initials: list[SimState] | None = None,
    T: float = 200.0,
    dt: float = 1e-3,
    conv_tol: float = 1e-3,
    conv_window: float = 10.0,
    reps: int = 0,
    seed: int = 0,
    sample_dt: float = 0.1,
    sim_tol: float = SIM_TOL,
    workers: int = 1,
) -> SweepResult:
    """Evaluate stability predicates and empirical convergence across a parameter grid.

    ``fluid_converged`` requires every bounded fluid trajectory from
    ``initials`` to converge (see :func:`fluid_status`).  With ``reps > 0`` each initial state is also
    simulated under the stylized scheme; ``sim_converged`` compares the
    median (over replications) of the worst trailing-window norm with
    ``sim_tol``.  Rows where a gain condition holds but some fluid
    trajectory neither converges nor decays are collected as
    counterexamples; slow decay within the horizon is ``inconclusive``.
    """
    if param not in SWEEPABLE:
        raise ValueError(f"can only sweep {', '.join(SWEEPABLE)}")
    values = [float(v) for v in values]
    if not values:
        raise ValueError("sweep grid is empty")
    result = SweepResult(param, values)
    initials = initials if initials is not None else default_battery(params)
    fcfg = FluidConfig(dt=dt, T=T, bounded=True, conv_tol=conv_tol, conv_window=min(conv_window, T))
    for value in values:
        p = validate(params.with_(**{param: value}))
        ok_i, _ = condition_i(p)
        ok_ii, _ = condition_ii(p)
        statuses = [fluid_status(integrate(to_centered(s, p), p, fcfg), fcfg) for s in initials]
        row = {
            "value": value,
            "cond_i": ok_i,
            "cond_ii": ok_ii,
            "cqlf_exists": cqlf_exists(build_matrices(p)),
            "fluid_converged": all(st == "converged" for st in statuses),
            "fluid_status": statuses,
            "sim_converged": None,
        }
        if reps > 0:
            worst = np.zeros(reps)
            for s in initials:
                scfg = SimConfig(T=T, sample_dt=sample_dt, seed=seed, scheme="stylized", initial=s)
                norms = [trailing_max_norm(tr, fcfg.conv_window) for tr in run_replications(scfg, p, reps, workers)]
                worst = np.maximum(worst, norms)
            row["sim_median_trailing_norm"] = float(np.median(worst))
            row["sim_converged"] = bool(np.median(worst) < sim_tol)
        row["verdict"] = _verdict(ok_i or ok_ii, statuses)
        result.rows.append(row)
        if row["verdict"] == "counterexample":
            bad = [[s.X, s.Y, s.Z] for s, st in zip(initials, statuses) if st == "persistent"]
            result.counterexamples.append({"value": value, "initials": bad})
    return result


def conjecture_probe(
    params: ModelParams,
    gammas,
    seeds: int = 0,
    *,
    battery: list[SimState] | None = None,
    T: float = 300.0,
    **kwargs,
) -> SweepResult:
    """Probe "local stability implies global stability" along a gain grid.

    A counterexample is a gain at which condition (i) or (ii) holds yet a
    bounded fluid trajectory from the battery persists without decaying.  Gains
    where the conditions fail but every trajectory converges are tagged
    ``sufficient-only``; they show the conditions are not necessary.
    """
    return sweep(params, "gamma", gammas, initials=battery, T=T, reps=seeds, **kwargs)


def frange(start: float, stop: float, step: float) -> list[float]:
    """Inclusive grid ``start, start+step, ..., stop`` without accumulation drift."""
    if step <= 0:
        raise ValueError("step must be positive")
    n = int(math.floor((stop - start) / step + 1e-9))
    return [round(start + i * step, 12) for i in range(n + 1)]
