"""Command-line front end.

Exit status: 0 on success, 1 on usage or parameter errors, 2 on numerical
failure.  Diagnostics go to stderr as a single line.
"""
from __future__ import annotations

import argparse
import csv
import sys
from io import StringIO
from pathlib import Path

from ..core import ModelParams, ParameterError, SimState, format_params, load_params, uniform_grid, validate
from ..fluid import AdmissibilityError, DivergenceError, FluidConfig, detect_convergence, integrate
from ..simulator import SCHEMES, TARGET_CONVENTIONS, SimConfig, SimulationError, run
from ..stability import stability_report
from . import io
from .experiments import DEFAULT_REPS, compare, conjecture_probe, fluid_start, frange, run_example, sweep
from .presets import PRESETS, get_preset


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_set(items: list[str]) -> dict[str, str]:
    out = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = (s.strip() for s in item.split("=", 1))
        out[k] = v
    return out


def _parse_initial(text: str) -> SimState:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) not in (3, 4):
        raise UsageError("--initial expects X,Y,Z or X,Y,Z,Xtarget")
    try:
        X, Y, Z = (int(p) for p in parts[:3])
        xt = float(parts[3]) if len(parts) == 4 else None
    except ValueError:
        raise UsageError(f"--initial has a non-numeric entry: {text!r}") from None
    return SimState(X, Y, Z, xt)


def _resolve(args) -> tuple[ModelParams, dict]:
    """Parameters plus preset-derived defaults (initial, scheme, horizon)."""
    overrides = _parse_set(args.set)
    defaults: dict = {}
    if args.preset:
        preset = get_preset(args.preset)
        values = {k: repr(v) for k, v in preset.params.as_dict().items()}
        defaults = {"initial": preset.initial, "scheme": preset.scheme, "T": preset.horizon}
        if args.params:
            raise UsageError("--preset and --params are mutually exclusive")
        values.update(overrides)
        params = validate(ModelParams.from_mapping(values))
    elif args.params:
        params = load_params(args.params, overrides)
    elif overrides:
        params = validate(ModelParams.from_mapping(overrides))
    else:
        raise UsageError("parameters required: --params FILE, --preset ID or --set key=value for all nine")
    return params, defaults


def _pick(value, defaults: dict, key: str, fallback):
    if value is not None:
        return value
    return defaults.get(key, fallback)


def _emit(text: str, out: Path | None, name: str) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)


def _csv_text(writer, *a, **kw) -> str:
    buf = StringIO()
    writer(*a, buf, **kw)
    return buf.getvalue()


def cmd_stability(args) -> int:
    params, _ = _resolve(args)
    _emit(io.dumps(stability_report(params).to_dict()), args.out, "stability.json")
    return 0


def _fluid_cfg(args, T: float, bounded: bool) -> FluidConfig:
    return FluidConfig(dt=args.dt, T=T, bounded=bounded, conv_tol=args.conv_tol,
                       conv_window=min(args.conv_window, T))


def cmd_fluid(args) -> int:
    params, d = _resolve(args)
    initial = _pick(args.initial, d, "initial", SimState(0, 0, 0))
    scheme = _pick(args.scheme, d, "scheme", "stylized")
    T = _pick(args.T, d, "T", 100.0)
    cfg = _fluid_cfg(args, T, not args.unbounded)
    traj = integrate(fluid_start(initial, params, scheme), params, cfg)
    conv = detect_convergence(traj, cfg)
    sample_dt = args.sample_dt if args.sample_dt is not None else cfg.dt
    coarse = traj.on_grid(uniform_grid(T, sample_dt)) if sample_dt != cfg.dt else traj
    summary = {
        "kind": traj.kind,
        "converged": conv.converged,
        "t_conv": conv.t_conv,
        "final_norm": conv.final_norm,
        "boundary_contacts": traj.meta["boundary_contacts"],
    }
    if args.format == "json":
        doc = dict(summary, t=coarse.grid, states=coarse.states)
        _emit(io.dumps(doc), args.out, "fluid.json")
    else:
        _emit(_csv_text(io.write_fluid_csv, coarse, params, coords=args.coords or "centered"), args.out, "fluid.csv")
        if args.out is not None:
            io.write_json(summary, args.out / "report.json")
        print(f"converged={str(conv.converged).lower()} t_conv={conv.t_conv} final_norm={conv.final_norm:.6g} "
              f"boundary_contacts={summary['boundary_contacts']}", file=sys.stderr)
    return 0


def cmd_simulate(args) -> int:
    params, d = _resolve(args)
    cfg = SimConfig(
        T=_pick(args.T, d, "T", 100.0),
        sample_dt=args.sample_dt if args.sample_dt is not None else 0.1,
        seed=args.seed,
        scheme=_pick(args.scheme, d, "scheme", "stylized"),
        initial=_pick(args.initial, d, "initial", SimState(0, 0, 0)),
        target_convention=args.target_convention,
    )
    traj = run(cfg, params)
    if args.format == "json":
        doc = dict(traj.meta, t=traj.grid, raw=traj.raw, states=traj.states)
        _emit(io.dumps(doc), args.out, "sim.json")
    else:
        _emit(_csv_text(io.write_sim_csv, traj, coords=args.coords or "raw"), args.out, "sim.csv")
    return 0


def cmd_compare(args) -> int:
    params, d = _resolve(args)
    T = _pick(args.T, d, "T", 50.0)
    res = compare(
        params,
        _pick(args.initial, d, "initial", SimState(0, 0, 0)),
        scheme=_pick(args.scheme, d, "scheme", "stylized"),
        T=T,
        dt=args.dt,
        sample_dt=args.sample_dt if args.sample_dt is not None else 0.1,
        seed=args.seed,
        reps=args.reps,
        bounded=not args.unbounded,
        conv_tol=args.conv_tol,
        conv_window=args.conv_window,
        target_convention=args.target_convention,
        workers=args.workers,
    )
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "params.txt").write_text(format_params(params))
        grid = uniform_grid(T, res.report["sample_dt"])
        with open(args.out / "fluid.csv", "w", newline="") as fh:
            io.write_fluid_csv(res.fluid.on_grid(grid), params, fh)
        if res.sims:
            with open(args.out / "sim.csv", "w", newline="") as fh:
                io.write_sim_csv(res.sims[0], fh)
    _emit(io.dumps(res.report), args.out, "report.json")
    return 0


def cmd_example(args) -> int:
    if args.id == "list":
        for pid, p in PRESETS.items():
            print(f"{pid}\t{p.scheme}\tT={p.horizon:g}\t{p.source}\t{p.description}")
        return 0
    try:
        get_preset(args.id)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    report = run_example(args.id, args.out, reps=args.reps, seed=args.seed,
                         sample_dt=args.sample_dt if args.sample_dt is not None else 0.1,
                         dt=args.dt, workers=args.workers)
    if args.out is None:
        sys.stdout.write(io.dumps(report))
    return 0


def cmd_sweep(args) -> int:
    params, _ = _resolve(args)
    if args.start is None or args.stop is None:
        raise UsageError("sweep needs --from and --to")
    values = frange(args.start, args.stop, args.step)
    if not values:
        raise UsageError("--to must not be below --from")
    T = args.T if args.T is not None else (300.0 if args.probe else 200.0)
    kw = dict(T=T, dt=args.dt, conv_tol=args.conv_tol, conv_window=args.conv_window,
              seed=args.seed, sample_dt=args.sample_dt if args.sample_dt is not None else 0.1,
              workers=args.workers)
    if args.probe:
        if args.param != "gamma":
            raise UsageError("--probe sweeps gamma only")
        result = conjecture_probe(params, values, args.sweep_reps, **kw)
    else:
        result = sweep(params, args.param, values, reps=args.sweep_reps, **kw)
    if args.format == "csv":
        buf = StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(result.CSV_COLUMNS)
        w.writerows(result.csv_rows())
        _emit(buf.getvalue(), args.out, "sweep.csv")
    else:
        _emit(io.dumps(result.to_dict()), args.out, "sweep.json")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--params", type=Path, help="parameter file with 'key = value' lines")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a parameter")
    common.add_argument("--preset", help="take parameters (and initial state, scheme, horizon) from a preset")
    common.add_argument("--scheme", choices=SCHEMES)
    common.add_argument("--initial", type=_parse_initial, help="X,Y,Z[,Xtarget]")
    common.add_argument("--T", type=float)
    common.add_argument("--dt", type=float, default=1e-3)
    common.add_argument("--sample-dt", type=float)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=Path, help="output directory (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--coords", choices=("centered", "raw"))
    common.add_argument("--unbounded", action="store_true", help="integrate the boundary-free system")
    common.add_argument("--conv-tol", type=float, default=1e-3)
    common.add_argument("--conv-window", type=float, default=10.0)
    common.add_argument("--target-convention", choices=TARGET_CONVENTIONS, default="before")
    common.add_argument("--workers", type=int, default=1)

    parser = _Parser(prog="agentinvite", description="Stability analysis, fluid limits and simulation.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("stability", parents=[common], help="stability report (JSON)").set_defaults(func=cmd_stability)
    sub.add_parser("fluid", parents=[common], help="fluid trajectory (CSV) and convergence verdict").set_defaults(
        func=cmd_fluid)
    sub.add_parser("simulate", parents=[common], help="one simulated trajectory (CSV)").set_defaults(func=cmd_simulate)
    p = sub.add_parser("compare", parents=[common], help="fluid vs. simulation sup-distance report (JSON)")
    p.add_argument("--reps", type=int, default=DEFAULT_REPS)
    p.set_defaults(func=cmd_compare)
    p = sub.add_parser("example", parents=[common], help="run a preset end to end, or 'list'")
    p.add_argument("id")
    p.add_argument("--reps", type=int, default=DEFAULT_REPS)
    p.set_defaults(func=cmd_example)
    p = sub.add_parser("sweep", parents=[common], help="vary gamma or epsilon over a grid")
    p.add_argument("--param", choices=("gamma", "epsilon"), default="gamma")
    p.add_argument("--from", dest="start", type=float)
    p.add_argument("--to", dest="stop", type=float)
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--reps", dest="sweep_reps", type=int, default=0, help="stylized replications per value")
    p.add_argument("--probe", action="store_true", help="classify each value against the local-implies-global question")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.format is None:
            args.format = "json" if args.command == "sweep" else "csv"
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ParameterError, AdmissibilityError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 1
    except (DivergenceError, SimulationError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
