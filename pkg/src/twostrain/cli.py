"""Command-line entry point: ``twostrain {simulate,analyze,phase,scan,fit}``.

Each command reads an INI config (see :mod:`twostrain.config`) and writes
CSV and JSON files into ``--out``.  Exit codes: 0 success, 2 configuration
error, 3 data error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .bifurcation import axis, classify_region, scan
from .config import load_config
from .core import FullState, ModelParams, ReducedState
from .data import load_case_data, load_variant_shares, write_csv, write_json
from .dynamics import integrate_rk4, omega_array, quasi_steady_strain1, reconstruct_full
from .equilibria import boundary_steady_states, solve_coexistence_full, solve_reduced_steady_state
from .errors import ConfigError, DegenerateRates, PreconditionFailed, TwoStrainError
from .fitting import FitSpec, aggregate_biweekly, fit, theta_from
from .phase import sample_nullclines, stability_sign_check, switching_line, vector_field
from .reproduction import closed_form_reproduction, ngm_reproduction

U64_MAX = 2 ** 64 - 1


def _seed(text):
    value = int(text)
    if not 0 <= value <= U64_MAX:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _reproduction_block(p: ModelParams):
    try:
        return closed_form_reproduction(p).as_dict()
    except DegenerateRates as exc:
        return {"error": str(exc)}


def _state_dict(x):
    if isinstance(x, FullState):
        return {"S": x.s, "I1": x.i1, "R1": x.r1, "I2": x.i2, "R2": x.r2}
    return {"I2": x.i2, "R2": x.r2}


def _region_block(p):
    label = classify_region(p)
    return {"label": label.label, "contested": label.contested}


# -- commands ----------------------------------------------------------------

def run_simulate(cfg, out: Path, seed: int, reproducible: bool) -> dict:
    cfg.require("simulate")
    p = cfg.params()
    s = cfg.section("simulate")
    model = s["model"]
    i1, r1, i2, r2 = s["i1"], s["r1"], s["i2"], s["r2"]
    if s["quasi_steady_start"]:
        i1, r1 = quasi_steady_strain1(p, (i2, r2))
    if model == "full":
        x0 = FullState.from_infected(p.n_pop, i1, r1, i2, r2)
    else:
        x0 = ReducedState(i2, r2)
    traj = integrate_rk4(model, p, x0, (0.0, s["t_end"]), h=s["h"])
    keep = np.arange(0, len(traj), s["record_every"])
    if keep[-1] != len(traj) - 1:
        keep = np.append(keep, len(traj) - 1)
    t = traj.times[keep]
    v = traj.values[keep]
    if model == "full":
        header = ("t", "S", "I1", "R1", "I2", "R2")
        rows = np.column_stack([t, v])
    else:
        header = ("t", "I2", "R2", "omega")
        rows = np.column_stack([t, v, omega_array(p, v[:, 0], v[:, 1])])
    write_csv(out / "trajectory.csv", header, rows.tolist(), reproducible)
    final = traj.final
    summary = {
        "command": "simulate",
        "model": model,
        "params": p.as_dict(),
        "t_end": float(traj.times[-1]),
        "h": traj.h,
        "initial_state": _state_dict(x0),
        "terminal_state": _state_dict(final),
        "reproduction": _reproduction_block(p),
        "region": _region_block(p),
    }
    if model == "full":
        summary["max_conservation_error"] = float(np.max(np.abs(traj.values.sum(axis=1) - p.n_pop)))
    else:
        lifted = reconstruct_full(traj)
        summary["terminal_full_state"] = _state_dict(lifted.final)
    write_json(out / "summary.json", summary, reproducible)
    return summary


def analyze_report(p: ModelParams) -> dict:
    """Steady states, reproduction numbers and region for one parameter set."""
    report = {
        "params": p.as_dict(),
        "reproduction": _reproduction_block(p),
        "boundary_states": [r.as_dict() for r in boundary_steady_states(p)],
        "region": _region_block(p),
    }
    try:
        report["reproduction_ngm"] = ngm_reproduction(p).as_dict()
    except DegenerateRates as exc:
        report["reproduction_ngm"] = {"error": str(exc)}
    report["coexistence"] = solve_coexistence_full(p).as_dict()
    try:
        reduced = solve_reduced_steady_state(p)
        block = {"regime": reduced.regime, "conjectured": reduced.conjectured, **_state_dict(reduced.state)}
        try:
            block["stability"] = stability_sign_check(p, reduced.state).as_dict()
        except TwoStrainError as exc:
            block["stability"] = {"error": str(exc)}
        report["reduced_steady_state"] = block
    except PreconditionFailed as exc:
        report["reduced_steady_state"] = {"error": str(exc)}
    return report


def run_analyze(cfg, out: Path, seed: int, reproducible: bool) -> dict:
    cfg.require("analyze")
    report = {"command": "analyze", **analyze_report(cfg.params())}
    write_json(out / "report.json", report, reproducible)
    return report


def run_phase(cfg, out: Path, seed: int, reproducible: bool) -> dict:
    cfg.require("phase")
    p = cfg.params()
    s = cfg.section("phase")
    n = p.n_pop
    summary = {"command": "phase", "params": p.as_dict()}

    grid = np.linspace(0.0, n, s["field_points"])
    field = vector_field(p, grid, grid)
    write_csv(out / "field.csv", ("I2", "R2", "dI2", "dR2"), field[:, :4].tolist(), reproducible)

    line = switching_line(p)
    rows = [] if line is None else [list(pt) for pt in line.endpoints()]
    write_csv(out / "switching_line.csv", ("I2", "R2"), rows, reproducible)

    rows = []
    try:
        columns = np.linspace(0.0, n, s["nullcline_points"] + 1)[:-1]
        for sample in sample_nullclines(p, columns):
            rows += [(sample.which, a, b) for a, b in sample.points[sample.found]]
            summary[sample.which] = {"monotonicity": sample.monotonicity, "missing_columns": len(sample.missing)}
        steady = solve_reduced_steady_state(p)
        summary["steady_state"] = {"regime": steady.regime, **_state_dict(steady.state)}
    except PreconditionFailed as exc:
        warnings.warn(f"nullclines skipped: {exc}", RuntimeWarning, stacklevel=2)
        summary["nullclines_skipped"] = str(exc)
    write_csv(out / "nullclines.csv", ("which", "I2", "R2"), rows, reproducible)
    write_json(out / "phase.json", summary, reproducible)
    return summary


def run_scan(cfg, out: Path, seed: int, reproducible: bool) -> dict:
    cfg.require("scan")
    p = cfg.params()
    s = cfg.section("scan")
    ax1 = axis(s["axis1"], s["axis1_start"], s["axis1_stop"], s["axis1_num"])
    ax2 = axis(s["axis2"], s["axis2_start"], s["axis2_stop"], s["axis2_num"])
    grid = scan(p, ax1, ax2, s["quantity"])
    rows = [(a, b, c.label if s["quantity"] == "region" else c) for a, b, c in grid.rows()]
    write_csv(out / "scan.csv", ("axis1", "axis2", "value"), rows, reproducible)
    meta = {
        "command": "scan",
        "axis1": ax1.name,
        "axis2": ax2.name,
        "quantity": s["quantity"],
        "cells": len(rows),
        "fixed": p.as_dict(),
    }
    write_json(out / "scan.json", meta, reproducible)
    return meta


def run_fit(cfg, out: Path, seed, reproducible: bool) -> dict:
    cfg.require("fit")
    p = cfg.params()
    s = cfg.section("fit")
    cases = load_case_data(s["case_file"])
    shares = load_variant_shares(s["share_file"])
    data = aggregate_biweekly(cases.dates, cases.new_cases, shares.window_end_dates,
                              shares.emerging_share, s["start_date"], s["end_date"])
    rng_seed = s["seed"] if seed is None else seed
    spec = FitSpec(model=s["model"], free=s["free"], rng_seed=rng_seed,
                   max_iterations=s["max_iterations"], h=s["h"])
    guess = theta_from(p, s["i1_0"], s["r1_0"], s["i2_0"], s["r2_0"])
    if spec.model == "reduced":
        guess = {k: v for k, v in guess.items() if k not in ("i1_0", "r1_0")}
    result = fit(spec, data, guess)
    rows = [(d, x, xh, y, yh) for d, x, xh, y, yh in zip(
        data.window_end_dates, data.original_cases, result.x_hat, data.emerging_cases, result.y_hat)]
    write_csv(out / "fit_predictions.csv", ("window", "x", "x_hat", "y", "y_hat"), rows, reproducible)
    fp = result.params
    i1_0, r1_0 = result.initial_strain1()
    report = {
        "command": "fit",
        "model": spec.model,
        "N": fp.n_pop,
        "I1(0)": i1_0,
        "R1(0)": r1_0,
        "I2(0)": result.initial_state.i2,
        "R2(0)": result.initial_state.r2,
        "beta1": fp.beta1,
        "beta2": fp.beta2,
        "gamma": fp.gamma1,
        "sigma1": fp.sigma1,
        "sigma2": fp.sigma2,
        "epsilon": fp.epsilon,
        # recomputed from the fitted rates, never carried over from the optimizer
        "reproduction": closed_form_reproduction(fp).as_dict(),
        "sse": result.sse,
        "seed": rng_seed,
        "status": result.status,
        "iterations": result.iterations_used,
        "evaluations": result.evaluations,
        "windows": len(data),
        "first_window_end": data.window_end_dates[0],
    }
    write_json(out / "fit_report.json", report, reproducible)
    return report


COMMANDS = {
    "simulate": (run_simulate, "integrate the full or reduced model"),
    "analyze": (run_analyze, "steady states, reproduction numbers and region"),
    "phase": (run_phase, "nullclines, vector field and switching line of the reduced model"),
    "scan": (run_scan, "two-parameter region or reproduction-number scan"),
    "fit": (run_fit, "fit the model to strain-split incidence data"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twostrain", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, type=Path, help="INI run configuration")
        cmd.add_argument("--out", required=True, type=Path, help="output directory")
        cmd.add_argument("--seed", type=_seed, default=None, help="RNG seed (unsigned 64-bit)")
        cmd.add_argument("--reproducible", action="store_true",
                         help="omit timestamps so identical inputs give byte-identical files")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = COMMANDS[args.command][0]
    try:
        cfg = load_config(args.config)
        args.out.mkdir(parents=True, exist_ok=True)
        seed = args.seed
        if args.command != "fit":
            seed = 0 if seed is None else seed
        handler(cfg, args.out, seed, args.reproducible)
    except TwoStrainError as exc:
        print(f"twostrain {args.command}: {exc}", file=sys.stderr)
        return getattr(exc, "exit_code", 1)
    except OSError as exc:
        print(f"twostrain {args.command}: {exc}", file=sys.stderr)
        return ConfigError.exit_code
    print(f"twostrain {args.command}: wrote results to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
