"""Command-line front end: simulate / fit / sensitivity / control / report.

Every run writes its artifacts plus a manifest recording the effective
settings and sha256 checksums of the CSV/JSON outputs, so identical
invocations are byte-identical and reproducible.  Exit codes: 0 success,
1 usage or configuration problem, 2 numerical non-convergence (artifacts
are still written), 3 I/O failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .control import (ControlSignal, NewtonDivergence, SweepSolution,
                      forward_backward_sweep, solve_states)
from .cost import build_report
from .equilibrium import NoEndemicEquilibrium, r0_seirs
from .fitting import (DEFAULT_BOUNDS, CaseSeries, FitSpec, equilibrium_for,
                      fit, load_case_series, predict_cases)
from .model import (PARAM_KEYS, CostWeights, ModelParams, load_params,
                    save_params)
from .rk4 import (NonFiniteState, TimeGrid, Trajectory, rk4_forward,
                  sample, trajectory_from_csv, trajectory_to_csv)
from . import fitting, plots, sensitivity as sens

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2
EXIT_IO = 3


class UsageError(ValueError):
    """Bad flags or flag values."""


class ConfigError(ValueError):
    """Inputs exist but are inconsistent with what the run needs."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 by default; route through UsageError
    # instead so the documented exit-code contract holds.
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="periseir",
                     description="Seasonally forced SIRS/SEIRS toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=False):
        p.add_argument("--params", required=True, help="flat key=value parameter file")
        if data:
            p.add_argument("--data", required=True, help="month,cases CSV")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--no-figures", action="store_true",
                       help="skip PNG rendering")

    p_sim = sub.add_parser("simulate", help="integrate a model forward")
    common(p_sim)
    p_sim.add_argument("--model", choices=("sirs", "seirs"), default="seirs")
    p_sim.add_argument("--tf", type=float, default=5.0, help="horizon in years")
    p_sim.add_argument("--steps", type=int, default=5000, help="grid steps")
    p_sim.add_argument("--phi", type=float, default=None,
                       help="override the phase angle from the params file")
    p_sim.set_defaults(func=cmd_simulate)

    p_fit = sub.add_parser("fit", help="estimate parameters from monthly counts")
    common(p_fit, data=True)
    p_fit.add_argument("--model", choices=("sirs", "seirs"), default="seirs")
    p_fit.add_argument("--free", default=None,
                       help="comma list of free parameters "
                            "(default b0,b1,c1,phi,s; c1 dropped for sirs)")
    p_fit.add_argument("--bounds", default=None,
                       help="optional file of 'name = lo, hi' lines")
    p_fit.add_argument("--steps", type=int, default=24,
                       help="integration steps per month")
    p_fit.add_argument("--restarts", type=int, default=8)
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--max-iter", type=int, default=400,
                       help="simplex iteration cap per start")
    p_fit.set_defaults(func=cmd_fit)

    p_sens = sub.add_parser("sensitivity",
                            help="reproduction-number sensitivity indices")
    common(p_sens)
    p_sens.set_defaults(func=cmd_sensitivity)

    p_ctl = sub.add_parser("control", help="solve the treatment problem")
    common(p_ctl)
    p_ctl.add_argument("--phi", type=float, default=None)
    p_ctl.add_argument("--tf", type=float, default=5.0)
    p_ctl.add_argument("--steps", type=int, default=5000)
    p_ctl.add_argument("--kappa1", type=float, default=1.0)
    p_ctl.add_argument("--kappa2", type=float, default=0.001)
    p_ctl.add_argument("--tmax", type=float, default=1.0,
                       help="admissible cap on the treatment rate")
    p_ctl.add_argument("--cost", type=float, default=1.0,
                       help="per-person unit cost of detection and treatment")
    p_ctl.add_argument("--relaxation", type=float, default=0.5)
    p_ctl.add_argument("--tol", type=float, default=1e-4)
    p_ctl.add_argument("--max-iter", type=int, default=500)
    p_ctl.set_defaults(func=cmd_control)

    p_rep = sub.add_parser("report",
                           help="cost-effectiveness report from control output")
    p_rep.add_argument("--control-dir", required=True,
                       help="directory written by the control subcommand")
    p_rep.add_argument("--out", required=True)
    p_rep.add_argument("--no-figures", action="store_true")
    p_rep.set_defaults(func=cmd_report)

    return parser


# ---------------------------------------------------------------------------
# artifact helpers


def _write_json(payload: dict, path: Path) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out: Path, command: str, settings: dict, files) -> None:
    manifest = {
        "command": command,
        "settings": settings,
        "checksums": {name: _sha256(out / name) for name in sorted(files)},
    }
    _write_json(manifest, out / "manifest.json")


def _require_file(path_str: str, what: str) -> Path:
    path = Path(path_str)
    if not path.is_file():
        raise ConfigError(f"{what} not found: {path}")
    return path


def _load_params_checked(args) -> ModelParams:
    params = load_params(_require_file(args.params, "params file"))
    if getattr(args, "phi", None) is not None:
        params = replace(params, phi=args.phi)
    return params


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _csv_lines(path: Path, header: str, rows) -> None:
    lines = [header]
    for row in rows:
        lines.append(",".join(str(cell) for cell in row))
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    params = _load_params_checked(args)
    if args.tf <= 0.0:
        raise ConfigError("--tf must be positive")
    if args.steps < 1:
        raise ConfigError("--steps must be at least 1")
    out = _out_dir(args)
    y0 = equilibrium_for(args.model, params)
    grid = TimeGrid(0.0, args.tf, args.steps)
    rhs = fitting._rhs_for(args.model, params)
    traj = rk4_forward(rhs, grid, y0)
    trajectory_to_csv(traj, out / "trajectory.csv")

    n_months = int(args.tf * 12.0 + 1e-9) + 1
    months = np.arange(n_months) / 12.0
    months = months[months <= args.tf + 1e-12]
    cases = params.s * sample(traj, months)[:, 2]
    _csv_lines(out / "monthly.csv", "month_index,t,cases",
               ((k, repr(float(t)), repr(float(c)))
                for k, (t, c) in enumerate(zip(months, cases))))

    files = ["trajectory.csv", "monthly.csv"]
    if not args.no_figures:
        plots.save_trajectory_plot(traj, out / "trajectory.png",
                                   title=f"{args.model} trajectory")
    _write_manifest(out, "simulate", {
        "params": params.as_dict(), "model": args.model,
        "tf": args.tf, "steps": args.steps,
    }, files)
    return EXIT_OK


def _parse_free(args) -> tuple:
    if args.free:
        names = tuple(name.strip() for name in args.free.split(",") if name.strip())
    elif args.model == "sirs":
        names = ("b0", "b1", "phi", "s")
    else:
        names = ("b0", "b1", "c1", "phi", "s")
    unknown = [n for n in names if n not in PARAM_KEYS]
    if unknown:
        raise ConfigError(f"unknown free parameters: {unknown}")
    return names


def _parse_bounds_file(path_str) -> dict:
    bounds = {}
    path = _require_file(path_str, "bounds file")
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition("=")
        parts = [p.strip() for p in rest.split(",")]
        if not sep or len(parts) != 2:
            raise ConfigError(f"{path}:{lineno}: expected 'name = lo, hi'")
        try:
            bounds[key.strip()] = (float(parts[0]), float(parts[1]))
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: bad bound") from None
    return bounds


def cmd_fit(args) -> int:
    data = load_case_series(_require_file(args.data, "data file"))
    params = load_params(_require_file(args.params, "params file"))
    free = _parse_free(args)
    bounds = _parse_bounds_file(args.bounds) if args.bounds else {}
    if args.model == "sirs":
        # the SIRS system has no latency or recruitment forcing
        if "c1" in free or "epsilon" in free:
            raise ConfigError("c1/epsilon are not fitted for the SIRS model")
    fixed = {k: getattr(params, k) for k in PARAM_KEYS if k not in free}
    guess = {k: getattr(params, k) for k in free}
    spec = FitSpec(kind=args.model, free=free, fixed=fixed, guess=guess,
                   bounds=bounds, steps_per_month=args.steps,
                   restarts=args.restarts, seed=args.seed,
                   max_iter=args.max_iter)
    result = fit(data, spec)

    out = _out_dir(args)
    predicted = predict_cases(result.params, args.model, data.n_months,
                              equilibrium_for(args.model, result.params),
                              args.steps)
    _csv_lines(out / "fit_series.csv", "month,empiric,predicted",
               ((label, repr(float(e)), repr(float(p)))
                for label, e, p in zip(data.month_labels(), data.counts,
                                       predicted)))
    save_params(result.params, out / "params_fitted.txt")
    _write_json({
        "params": result.params.as_dict(),
        "error": result.error,
        "iterations": result.iterations,
        "converged": result.converged,
        "phi_offset": result.phi_offset,
        "start_errors": list(result.start_errors),
        "evaluations": len(result.history),
    }, out / "fit.json")
    files = ["fit_series.csv", "fit.json", "params_fitted.txt"]
    if not args.no_figures:
        plots.save_fit_plot(data.month_labels(), data.counts, predicted,
                            out / "fit.png")
    _write_manifest(out, "fit", {
        "model": args.model, "free": list(free),
        "bounds": {k: list(v) for k, v in spec.effective_bounds().items()
                   if k in free},
        "steps_per_month": args.steps, "restarts": args.restarts,
        "seed": args.seed, "max_iter": args.max_iter,
        "guess": guess, "fixed": fixed,
    }, files)
    return EXIT_OK if result.converged else EXIT_NUMERIC


def cmd_sensitivity(args) -> int:
    params = load_params(_require_file(args.params, "params file"))
    out = _out_dir(args)
    indices = []
    for name in sens.INDEX_PARAMETERS:
        indices.append(sens.sensitivity_analytic_standard(params, name))
        indices.append(sens.sensitivity_analytic_variant(params, name))
        indices.append(sens.sensitivity_numeric(r0_seirs, params, name))
    _csv_lines(out / "sensitivity.csv", "parameter,mode,index",
               ((ix.parameter, ix.mode, repr(float(ix.value)))
                for ix in indices))
    files = ["sensitivity.csv"]
    if not args.no_figures:
        plots.save_sensitivity_plot(indices, out / "sensitivity.png")
    _write_manifest(out, "sensitivity", {"params": params.as_dict()}, files)
    return EXIT_OK


def cmd_control(args) -> int:
    params = _load_params_checked(args)
    if args.tf <= 0.0:
        raise ConfigError("--tf must be positive")
    if args.steps < 1:
        raise ConfigError("--steps must be at least 1")
    weights = CostWeights(kappa1=args.kappa1, kappa2=args.kappa2,
                          unit_cost=args.cost, t_f=args.tf,
                          control_max=args.tmax)
    grid = TimeGrid(0.0, args.tf, args.steps)
    y0 = equilibrium_for("seirs", params)
    solution = forward_backward_sweep(params, weights, y0, grid,
                                      relaxation=args.relaxation,
                                      tol=args.tol, max_iter=args.max_iter)
    baseline = solve_states(params, grid, y0)

    out = _out_dir(args)
    trajectory_to_csv(solution.states, out / "states.csv")
    trajectory_to_csv(solution.costates, out / "costates.csv",
                      labels=("p1", "p2", "p3", "p4"))
    trajectory_to_csv(baseline, out / "baseline.csv")
    _csv_lines(out / "control.csv", "t,T",
               ((repr(float(t)), repr(float(v)))
                for t, v in zip(grid.nodes(), solution.control.values)))
    _write_json({
        "params": params.as_dict(),
        "weights": {"kappa1": weights.kappa1, "kappa2": weights.kappa2,
                    "unit_cost": weights.unit_cost, "t_f": weights.t_f,
                    "control_max": weights.control_max},
        "grid": {"t0": grid.t0, "tf": grid.tf, "n_steps": grid.n_steps},
        "relaxation": args.relaxation, "tol": args.tol,
        "objective": solution.objective,
        "iterations": solution.iterations,
        "converged": solution.converged,
        "final_change": solution.final_change,
    }, out / "summary.json")
    files = ["states.csv", "costates.csv", "baseline.csv", "control.csv",
             "summary.json"]
    if not args.no_figures:
        plots.save_control_plot(solution, out / "control.png")
    _write_manifest(out, "control", {
        "params": params.as_dict(), "tf": args.tf, "steps": args.steps,
        "kappa1": args.kappa1, "kappa2": args.kappa2, "tmax": args.tmax,
        "cost": args.cost, "relaxation": args.relaxation, "tol": args.tol,
        "max_iter": args.max_iter,
    }, files)
    return EXIT_OK if solution.converged else EXIT_NUMERIC


def cmd_report(args) -> int:
    control_dir = Path(args.control_dir)
    summary_path = control_dir / "summary.json"
    if not summary_path.is_file():
        raise ConfigError(f"no control summary at {summary_path}")
    summary = json.loads(summary_path.read_text())
    params = ModelParams(**summary["params"])
    w = summary["weights"]
    weights = CostWeights(kappa1=w["kappa1"], kappa2=w["kappa2"],
                          unit_cost=w["unit_cost"], t_f=w["t_f"],
                          control_max=w["control_max"])
    _, states = trajectory_from_csv(
        _require_file(control_dir / "states.csv", "states CSV"))
    _, costates = trajectory_from_csv(
        _require_file(control_dir / "costates.csv", "costates CSV"))
    _, baseline = trajectory_from_csv(
        _require_file(control_dir / "baseline.csv", "baseline CSV"))
    _, control_traj = trajectory_from_csv(
        _require_file(control_dir / "control.csv", "control CSV"))
    control = ControlSignal(states.grid, control_traj.values[:, 0])
    solution = SweepSolution(states=states, costates=costates, control=control,
                             objective=summary["objective"],
                             iterations=summary["iterations"],
                             converged=summary["converged"],
                             final_change=summary["final_change"])
    report = build_report(solution, baseline, weights, params.s)

    out = _out_dir(args)
    _csv_lines(out / "efficacy.csv", "t,F",
               ((repr(float(t)), repr(float(f)))
                for t, f in zip(states.grid.nodes(), report.efficacy)))
    _write_json({
        "averted": report.averted,
        "effectiveness": report.effectiveness,
        "total_cost": report.total_cost,
        "acer": report.acer,
        "f_min": report.f_min,
        "f_max": report.f_max,
        "objective": solution.objective,
        "converged": solution.converged,
    }, out / "report.json")
    files = ["efficacy.csv", "report.json"]
    if not args.no_figures:
        plots.save_efficacy_plot(states.grid.nodes(), report.efficacy,
                                 out / "efficacy.png")
    _write_manifest(out, "report", {
        "params": params.as_dict(),
        "weights": w,
    }, files)
    return EXIT_OK


def run_pipeline(params_file, out_dir, *, phi=None, tf=5.0, steps=5000,
                 kappa1=1.0, kappa2=0.001, tmax=1.0, cost=1.0,
                 relaxation=0.5, tol=1e-4, max_iter=500,
                 figures=True) -> int:
    """Run control then report into one directory; returns the exit code.

    The report is produced even when the sweep stops at the iteration cap
    (exit code 2), so partial runs remain inspectable.
    """
    argv = ["control", "--params", str(params_file), "--out", str(out_dir),
            "--tf", repr(tf), "--steps", str(steps),
            "--kappa1", repr(kappa1), "--kappa2", repr(kappa2),
            "--tmax", repr(tmax), "--cost", repr(cost),
            "--relaxation", repr(relaxation), "--tol", repr(tol),
            "--max-iter", str(max_iter)]
    if phi is not None:
        argv += ["--phi", repr(phi)]
    if not figures:
        argv.append("--no-figures")
    rc_control = main(argv)
    if rc_control not in (EXIT_OK, EXIT_NUMERIC):
        return rc_control
    argv = ["report", "--control-dir", str(out_dir), "--out", str(out_dir)]
    if not figures:
        argv.append("--no-figures")
    rc_report = main(argv)
    return rc_report if rc_report != EXIT_OK else rc_control


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (NewtonDivergence, NonFiniteState) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, ConfigError, NoEndemicEquilibrium, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
