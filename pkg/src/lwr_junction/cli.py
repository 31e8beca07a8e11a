"""Command line interface.

Subcommands: solve (single Riemann problem), simulate (time marching),
compare (kinetic versus macroscopic distances), validate (randomized
property suites) and table1 (the bundled demo junction under its two
entropy choices). Outputs are deterministic for a given configuration and
seed, except for the 'timings' key of report.json.

Exit codes: 0 success, 2 invalid input (the message names the field),
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from .config import ConfigError, ScenarioConfig
from .core import SolverError, self_similar_eval
from .junction import classify_state, solve_riemann
from .max_dissipation import kkt_cases, solve_max_dissipation
from .network import _grid_layout, bgk_solve, compare_kinetic_macroscopic, godunov_solve
from .presets import table1_data, table1_junction
from .validate import run_suite

__all__ = ["main"]


def _fmt(value):
    return "%.17g" % float(value)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _write_traces(path, rows):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t", "road_id", "rho_trace", "flux_trace", "hat_rho"])
        for t, road_id, rho, flux, hat in rows:
            writer.writerow([_fmt(t), road_id, _fmt(rho), _fmt(flux), _fmt(hat)])


def _write_fields(path, rows):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t", "road_id", "x", "rho"])
        for t, road_id, x, rho in rows:
            writer.writerow([_fmt(t), road_id, _fmt(x), _fmt(rho)])


def _write_report(path, report):
    with open(path, "w") as handle:
        json.dump(_jsonable(report), handle, indent=2, sort_keys=True)
        handle.write("\n")


def _outdir(args, config=None):
    if args.output is not None:
        path = args.output
    elif config is not None:
        path = config.output_dir
    else:
        path = "."
    os.makedirs(path, exist_ok=True)
    return path


def _solution_dict(junction, sol):
    return {
        "m": sol.m,
        "z": sol.z,
        "road_ids": [road.road_id for road in junction.roads],
        "hat_rho": sol.hat_rho,
        "trace_rho": sol.trace_rho,
        "trace_flux": sol.trace_flux,
        "ghost_trace": sol.ghost_trace,
        "balance_residual": sol.balance_residual,
    }


def _cmd_solve(args):
    started = time.time()
    config = ScenarioConfig.load(args.config)
    junction = config.junction()
    datum = config.riemann_datum(junction)
    sol = solve_riemann(junction, datum)
    outdir = _outdir(args, config)

    report = {
        "command": "solve",
        "config": config.to_dict(),
        "riemann": _solution_dict(junction, sol),
        "trace_class": classify_state(junction, sol.trace_rho),
    }
    if all(road.dissipation_compatible for road in junction.roads):
        opt = solve_max_dissipation(junction, datum)
        report["max_dissipation"] = _solution_dict(junction, opt)
        report["max_dissipation"]["kkt"] = kkt_cases(junction, datum, opt)
        report["flux_agreement"] = float(
            np.max(np.abs(sol.trace_flux - opt.trace_flux))
        )

    _write_traces(
        os.path.join(outdir, "traces.csv"),
        [
            (0.0, road.road_id, sol.trace_rho[k], sol.trace_flux[k], sol.hat_rho[k])
            for k, road in enumerate(junction.roads)
        ],
    )

    t_end = config.solver["t_end"]
    _, centers = _grid_layout(junction, config.solver["dx"], config.solver["truncation"])
    field_rows = []
    for k, road in enumerate(junction.roads):
        for x in centers[k]:
            if t_end > 0:
                if road.direction == "in":
                    value = self_similar_eval(
                        road.flux, datum[k], sol.hat_rho[k], x / t_end, "from-left"
                    )
                else:
                    value = self_similar_eval(
                        road.flux, sol.hat_rho[k], datum[k], x / t_end, "from-right"
                    )
            else:
                value = datum[k]
            field_rows.append((t_end, road.road_id, x, value))
    _write_fields(os.path.join(outdir, "fields.csv"), field_rows)

    report["timings"] = {"total_s": time.time() - started}
    _write_report(os.path.join(outdir, "report.json"), report)
    print(
        "solve: M=%s z=%s residual=%s" % (_fmt(sol.m), _fmt(sol.z), _fmt(sol.balance_residual))
    )
    return 0


def _cmd_simulate(args):
    started = time.time()
    config = ScenarioConfig.load(args.config)
    junction = config.junction()
    initial = config.initial_functions(junction)
    outdir = _outdir(args, config)
    solver = config.solver
    trace_rows = []

    if solver["scheme"] == "godunov":
        def callback(state, sol):
            for k, road in enumerate(junction.roads):
                trace_rows.append(
                    (
                        state.time,
                        road.road_id,
                        sol.trace_rho[k],
                        sol.trace_flux[k],
                        sol.hat_rho[k],
                    )
                )

        run = godunov_solve(
            junction,
            initial,
            solver["dx"],
            solver["t_end"],
            cfl=solver["cfl"],
            truncation=solver["truncation"],
            callback=callback,
        )
        _, centers = _grid_layout(junction, solver["dx"], solver["truncation"])
        fields = run.state.rho
    else:
        def callback(state):
            info = state.last_step
            for k, road in enumerate(junction.roads):
                adjacent = state.g[k][-1] if road.direction == "in" else state.g[k][0]
                moment = float(adjacent @ state.grid.widths[k])
                trace_rows.append(
                    (
                        state.time,
                        road.road_id,
                        moment,
                        info["junction_fluxes"][k],
                        info["hat_rho"][k],
                    )
                )

        run = bgk_solve(
            junction,
            initial,
            solver["dx"],
            solver["dxi"],
            solver["t_end"],
            solver["epsilon"],
            cfl=solver["cfl"],
            truncation=solver["truncation"],
            callback=callback,
        )
        centers = run.state.grid.x_centers
        fields = run.state.moments()

    _write_traces(os.path.join(outdir, "traces.csv"), trace_rows)
    field_rows = []
    for k, road in enumerate(junction.roads):
        for x, value in zip(centers[k], fields[k]):
            field_rows.append((run.report["t_end"], road.road_id, x, value))
    _write_fields(os.path.join(outdir, "fields.csv"), field_rows)

    report = {
        "command": "simulate",
        "config": config.to_dict(),
        "run": run.report,
        "timings": {"total_s": time.time() - started},
    }
    _write_report(os.path.join(outdir, "report.json"), report)
    print(
        "simulate: %d steps, mass drift %s, worst balance residual %s"
        % (
            run.report["steps"],
            _fmt(run.report["mass_drift_rel"]),
            _fmt(run.report["max_balance_residual"]),
        )
    )
    return 0


def _cmd_compare(args):
    started = time.time()
    config = ScenarioConfig.load(args.config)
    junction = config.junction()
    initial = config.initial_functions(junction)
    outdir = _outdir(args, config)
    solver = config.solver
    try:
        epsilons = [float(v) for v in args.epsilons.split(",") if v.strip()]
    except ValueError:
        raise ConfigError("epsilons: expected a comma separated list of numbers")
    if not epsilons:
        raise ConfigError("epsilons: need at least one value")
    report = compare_kinetic_macroscopic(
        junction,
        initial,
        epsilons,
        solver["dx"],
        solver["dxi"],
        solver["t_end"],
        cfl=solver["cfl"],
        truncation=solver["truncation"],
    )
    report = {
        "command": "compare",
        "config": config.to_dict(),
        "comparison": report,
        "timings": {"total_s": time.time() - started},
    }
    _write_report(os.path.join(outdir, "report.json"), report)
    distances = report["comparison"]["distances"]
    for eps in sorted(distances, reverse=True):
        print("compare: epsilon=%s distance=%s" % (_fmt(eps), _fmt(distances[eps])))
    print(
        "compare: monotone=%s self_refinement=%s"
        % (
            report["comparison"]["monotone_decreasing"],
            _fmt(report["comparison"]["godunov_self_refinement"]),
        )
    )
    return 0


def _cmd_validate(args):
    started = time.time()
    outdir = _outdir(args)
    try:
        report = run_suite(args.suite, args.samples, args.seed)
    except ValueError as exc:
        raise ConfigError("suite: %s" % exc)
    report["timings"] = {"total_s": time.time() - started}
    _write_report(os.path.join(outdir, "report.json"), report)
    print(
        "validate %s: samples=%d seed=%d passed=%s"
        % (args.suite, args.samples, args.seed, report["passed"])
    )
    return 0 if report["passed"] else 3


def _cmd_table1(args):
    started = time.time()
    outdir = _outdir(args)
    rows = []
    report = {"command": "table1", "variants": {}}
    for name, kind in (("common", "quadratic"), ("neg_flux", "neg_flux")):
        junction = table1_junction(kind)
        datum = table1_data()
        sol = solve_riemann(junction, datum)
        report["variants"][name] = _solution_dict(junction, sol)
        print("variant %s: M=%s z=%s" % (name, _fmt(sol.m), _fmt(sol.z)))
        for k, road in enumerate(junction.roads):
            rows.append(
                (
                    0.0,
                    "%s:%s" % (name, road.road_id),
                    sol.trace_rho[k],
                    sol.trace_flux[k],
                    sol.hat_rho[k],
                )
            )
            print(
                "  road %s: trace=%s flux=%s hat=%s"
                % (
                    road.road_id,
                    _fmt(sol.trace_rho[k]),
                    _fmt(sol.trace_flux[k]),
                    _fmt(sol.hat_rho[k]),
                )
            )
    _write_traces(os.path.join(outdir, "traces.csv"), rows)
    report["timings"] = {"total_s": time.time() - started}
    _write_report(os.path.join(outdir, "report.json"), report)
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="lwr-junction",
        description="Junction solvers for the LWR traffic model",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one junction Riemann problem")
    p_solve.add_argument("--config", required=True, help="scenario YAML file")
    p_solve.add_argument("--output", default=None, help="output directory")
    p_solve.set_defaults(func=_cmd_solve)

    p_sim = sub.add_parser("simulate", help="march the configured scheme in time")
    p_sim.add_argument("--config", required=True, help="scenario YAML file")
    p_sim.add_argument("--output", default=None, help="output directory")
    p_sim.set_defaults(func=_cmd_simulate)

    p_cmp = sub.add_parser("compare", help="kinetic versus macroscopic distances")
    p_cmp.add_argument("--config", required=True, help="scenario YAML file")
    p_cmp.add_argument("--output", default=None, help="output directory")
    p_cmp.add_argument(
        "--epsilons",
        default="0.1,0.01,0.001",
        help="comma separated relaxation scales",
    )
    p_cmp.set_defaults(func=_cmd_compare)

    p_val = sub.add_parser("validate", help="randomized property suites")
    p_val.add_argument(
        "--suite",
        required=True,
        choices=["contraction", "conservation", "germ", "equivalence"],
    )
    p_val.add_argument("--samples", type=int, default=20)
    p_val.add_argument("--seed", type=int, default=0)
    p_val.add_argument("--output", default=None, help="output directory")
    p_val.set_defaults(func=_cmd_validate)

    p_tab = sub.add_parser("table1", help="solve the bundled demo junction")
    p_tab.add_argument("--output", default=None, help="output directory")
    p_tab.set_defaults(func=_cmd_table1)

    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except SolverError as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except ValueError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
