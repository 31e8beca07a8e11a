"""Randomized validation suites behind the command line interface.

Each suite draws reproducible random junctions and checks one structural
property of the solvers, reporting the worst observed margin.
"""

from __future__ import annotations

import numpy as np

from .junction import classify_state, germ_dissipation, solve_riemann
from .max_dissipation import solve_max_dissipation
from .network import bgk_solve, godunov_solve
from .sampling import (
    random_junction,
    random_state,
    sample_fixed_points,
    sample_germ_members,
)

__all__ = ["run_suite"]


def _perturbed_pair(rng, junction, nx):
    """Two per-road cell arrays differing only in the middle band."""
    base = []
    bumped = []
    for road in junction.roads:
        a, b = road.flux.a, road.flux.b
        level = rng.uniform(a, b)
        cells = np.full(nx, level)
        other = cells.copy()
        lo, hi = nx // 3, 2 * nx // 3
        other[lo:hi] = np.clip(
            other[lo:hi] + rng.uniform(-0.2, 0.2) * (b - a), a, b
        )
        base.append(cells)
        bumped.append(other)
    return base, bumped


def _suite_contraction(samples, rng):
    nx = 24
    worst = -np.inf
    for _ in range(samples):
        junction = random_junction(rng, entropy_style="strict")
        truncation = 0.3
        dx = truncation / nx
        max_speed = max(road.flux.lipschitz for road in junction.roads)
        t_end = 0.9 * (truncation / 3.0) / max_speed
        base, bumped = _perturbed_pair(rng, junction, nx)
        run_a = godunov_solve(junction, base, dx, t_end, truncation=truncation)
        run_b = godunov_solve(junction, bumped, dx, t_end, truncation=truncation)
        l1_start = sum(
            float(np.sum(np.abs(x - y))) * dx for x, y in zip(base, bumped)
        )
        l1_end = sum(
            float(np.sum(np.abs(x - y))) * dx
            for x, y in zip(run_a.state.rho, run_b.state.rho)
        )
        worst = max(worst, l1_end - l1_start)
    return {"worst_growth": worst, "passed": bool(worst <= 1e-11)}


def _suite_conservation(samples, rng):
    worst = 0.0
    for i in range(samples):
        junction = random_junction(rng, entropy_style="strict")
        constants = [rng.uniform(r.flux.a, r.flux.b) for r in junction.roads]
        run = godunov_solve(
            junction, constants, 0.3 / 20, 0.05, truncation=0.3
        )
        worst = max(worst, run.report["mass_drift_rel"])
        if i % 5 == 0:
            bgk = bgk_solve(
                junction, constants, 0.3 / 10, 0.1, 0.05, 1e-2, truncation=0.3
            )
            worst = max(worst, bgk.report["mass_drift_rel"])
    return {"worst_drift": worst, "passed": bool(worst <= 1e-12)}


def _suite_germ(samples, rng):
    worst = np.inf
    witnesses_ok = True
    for _ in range(samples):
        junction = random_junction(rng, entropy_style="strict")
        fixed = sample_fixed_points(junction, rng, 8)
        for i in range(len(fixed)):
            for j in range(i + 1, len(fixed)):
                worst = min(worst, germ_dissipation(junction, fixed[i], fixed[j]))
        state = random_state(rng, junction)
        if classify_state(junction, state) == "not-fixed":
            members = sample_germ_members(junction, rng, 10)
            violations = [
                germ_dissipation(junction, state, member) for member in members
            ]
            if min(violations) >= -1e-12:
                witnesses_ok = False
    passed = bool(worst >= -1e-12 and witnesses_ok)
    return {
        "worst_dissipation": float(worst),
        "witnesses_found": witnesses_ok,
        "passed": passed,
    }


def _suite_equivalence(samples, rng):
    worst = 0.0
    for _ in range(samples):
        junction = random_junction(rng, entropy_style="strict")
        datum = random_state(rng, junction)
        a = solve_riemann(junction, datum)
        b = solve_max_dissipation(junction, datum)
        scale = max(1.0, junction.flux_scale)
        worst = max(
            worst,
            float(np.max(np.abs(a.trace_flux - b.trace_flux))) / scale,
        )
    return {"worst_flux_distance": worst, "passed": bool(worst <= 1e-8)}


_SUITES = {
    "contraction": _suite_contraction,
    "conservation": _suite_conservation,
    "germ": _suite_germ,
    "equivalence": _suite_equivalence,
}


def run_suite(name, samples, seed):
    """Run one named suite and return its report dict."""
    if name not in _SUITES:
        raise ValueError(
            "unknown suite %r; available: %s" % (name, ", ".join(sorted(_SUITES)))
        )
    rng = np.random.default_rng(seed)
    report = _SUITES[name](samples, rng)
    report.update({"suite": name, "samples": samples, "seed": seed})
    return report
