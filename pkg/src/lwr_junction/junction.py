"""Generalized Riemann solver at the junction.

A junction couples n incoming and m outgoing roads through ghost states
selected along a scalar entropy-slope level M (with a priority profile
breaking ties inside flat level sets). The flux imbalance Xi is monotone
along the lexicographic sweep over (M, z), so the solver is a guarded
bisection with a secant polish, shared by the optimization-based and the
kinetic couplings as well.
"""

from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from .core import (
    BranchDecomposition,
    SolverError,
    godunov_flux,
    is_dissipation_compatible,
    kruzkov_flux,
    self_similar_eval,
)

__all__ = [
    "LinearPriority",
    "Road",
    "Junction",
    "JunctionSolution",
    "hat_states",
    "xi",
    "solve_riemann",
    "classify_state",
    "germ_dissipation",
    "germ_project",
    "solve_balance_sweep",
]


class LinearPriority:
    """Default priority profile: linear interpolation across the level set.

    Maps z in [0, 1] onto S(M) = [min S, max S]; increasing and surjective,
    and monotone in M because level sets move rightward with M.
    """

    kind = "linear"

    def select(self, pair, m, z):
        lo, hi = pair.level_set(m)
        return lo + z * (hi - lo)


class Road:
    """One road attached to the junction.

    Bundles the flux, the entropy pair, the travel direction and the
    priority profile, plus the derived branch decomposition. The entropy
    derivative must cover the flux domain.
    """

    def __init__(self, road_id, direction, flux, entropy, priority=None):
        if direction not in ("in", "out"):
            raise ValueError("direction must be 'in' or 'out', got %r" % (direction,))
        tol = 1e-12 * max(1.0, abs(flux.a), abs(flux.b))
        if entropy.a > flux.a + tol or entropy.b < flux.b - tol:
            raise ValueError(
                "entropy derivative of road %r must cover the flux domain [%g, %g]"
                % (road_id, flux.a, flux.b)
            )
        self.road_id = str(road_id)
        self.direction = direction
        self.flux = flux
        self.entropy = entropy
        self.priority = priority if priority is not None else LinearPriority()
        self.branch = BranchDecomposition(flux, direction)
        if entropy.dissipation_compatible is None:
            self.dissipation_compatible = is_dissipation_compatible(entropy, flux)
        else:
            self.dissipation_compatible = bool(entropy.dissipation_compatible)


class Junction:
    """Topology plus per-road model data for a single junction."""

    def __init__(self, incoming, outgoing):
        incoming = list(incoming)
        outgoing = list(outgoing)
        if not incoming or not outgoing:
            raise ValueError("need at least one incoming and one outgoing road")
        ids = [r.road_id for r in incoming + outgoing]
        if len(set(ids)) != len(ids):
            raise ValueError("road ids must be unique, got %s" % (ids,))
        self.incoming = incoming
        self.outgoing = outgoing
        self.roads = incoming + outgoing
        self.n = len(incoming)
        self.m = len(outgoing)
        # Finite bracket for the level sweep: the boundary conventions make
        # eta' unbounded at the domain ends, so the extreme finite slopes
        # stand in, padded by one unit.
        self.m_lo = min(float(r.entropy.vs[0]) for r in self.roads) - 1.0
        self.m_hi = max(float(r.entropy.vs[-1]) for r in self.roads) + 1.0
        levels = [r.entropy.flat_levels() for r in self.roads]
        self.tiebreak_levels = np.unique(np.concatenate(levels)) if levels else np.array([])
        self.flux_scale = max(r.flux.f_max for r in self.roads)

    def validate_states(self, rho):
        rho = np.asarray(rho, dtype=float)
        if rho.shape != (self.n + self.m,):
            raise ValueError(
                "expected %d road states, got shape %s" % (self.n + self.m, rho.shape)
            )
        out = np.empty_like(rho)
        for k, road in enumerate(self.roads):
            out[k] = road.flux.check_domain(rho[k], "state of road %r" % road.road_id)
        return out


@dataclass
class JunctionSolution:
    """Output of any of the junction solvers.

    hat_rho are the ghost states, trace_rho the road-side boundary traces,
    ghost_trace the traces on the artificial side, trace_flux the junction
    fluxes (ordered incoming first). m_edges / z_edges record the zero
    interval of the balance sweep when one was resolved.
    """

    m: float
    z: float
    hat_rho: np.ndarray
    trace_rho: np.ndarray
    trace_flux: np.ndarray
    ghost_trace: np.ndarray
    incoming_count: int
    balance_residual: float
    m_edges: tuple = None
    z_edges: tuple = None

    @property
    def incoming_flux(self):
        return self.trace_flux[: self.incoming_count]

    @property
    def outgoing_flux(self):
        return self.trace_flux[self.incoming_count :]


def hat_states(junction, m, z):
    """Ghost states selected by the priority profiles at level (M, z)."""
    return np.array(
        [road.priority.select(road.entropy, m, z) for road in junction.roads]
    )


def _xi_raw(junction, rho0, m, z):
    total = 0.0
    for k, road in enumerate(junction.roads):
        hat = road.priority.select(road.entropy, m, z)
        if road.direction == "in":
            total += godunov_flux(road.flux, rho0[k], hat)
        else:
            total -= godunov_flux(road.flux, hat, rho0[k])
    return total


def xi(junction, rho0, m, z=0.0):
    """Flux imbalance: incoming Godunov fluxes minus outgoing ones.

    Nonincreasing in M for fixed z and in z for fixed M; its zeros are the
    admissible levels of the generalized Riemann problem.
    """
    return _xi_raw(junction, junction.validate_states(rho0), m, z)


SweepResult = namedtuple("SweepResult", "m z m_edges z_edges residual")


def _edge_polish(fun, outside, g_out, inside, g_in, anchor, tol_x, threshold, max_iter):
    """Boundary of {|fun| <= threshold} between an outside and an inside
    point, bisected to tol_x and then secant-polished toward the zero of
    the adjacent linear piece (near-exact for transversal crossings). The
    anchor is a known point of the zero region bounding the polish."""
    o, go, i, gi = outside, g_out, inside, g_in
    for _ in range(max_iter):
        if abs(i - o) <= tol_x:
            break
        mid = 0.5 * (o + i)
        gm = fun(mid)
        if abs(gm) > threshold and (gm > 0) == (go > 0):
            o, go = mid, gm
        else:
            i, gi = mid, gm
    if gi == go:
        return i
    root = o - go * (i - o) / (gi - go)
    lo = min(o, i, anchor)
    hi = max(o, i, anchor)
    if not (lo <= root <= hi):
        return i
    return root


def _root_refine(fun, lo, g_lo, hi, g_hi, best_x, best_g, max_iter=40):
    """Drive the residual toward zero inside a narrow zero band.

    A transversal crossing is piecewise linear, so a bracketed secant lands
    on the exact root within a step or two; without a sign bracket the
    seeded best point is kept. Only interior iterates can replace it, never
    the band edges themselves.
    """
    a, ga, b, gb = lo, g_lo, hi, g_hi
    if not (ga > 0.0 > gb or gb > 0.0 > ga):
        return best_x, best_g
    for _ in range(max_iter):
        if ga == gb:
            break
        x = b - gb * (b - a) / (gb - ga)
        if not (min(a, b) < x < max(a, b)):
            break
        gx = fun(x)
        if abs(gx) < abs(best_g):
            best_x, best_g = x, gx
        if gx == 0.0:
            break
        if (gx > 0.0) == (ga > 0.0):
            a, ga = x, gx
        else:
            b, gb = x, gx
    return best_x, best_g


def solve_balance_sweep(balance, m_lo, m_hi, ftol, mtol, candidates=(), max_iter=200):
    """Zero of a balance function nonincreasing in the lex order on (M, z).

    First bisects M at z = 0. A sign change without a crossing means the
    balance jumps at a flat level of some entropy derivative; the level is
    snapped to the nearest candidate and the continuous tie-break parameter
    z is bisected there. Zero intervals are resolved to their midpoint.

    Raises SolverError when the bracket is invalid or no candidate level
    matches a detected jump.
    """
    def g(m):
        return balance(m, 0.0)

    g_lo = g(m_lo)
    g_hi = g(m_hi)
    if g_lo < -ftol or g_hi > ftol:
        raise SolverError(
            "balance bracket invalid: endpoint values %g and %g" % (g_lo, g_hi)
        )
    a, ga, b, gb = m_lo, g_lo, m_hi, g_hi
    m0 = g0 = None
    if abs(ga) <= ftol:
        m0, g0 = a, ga
    elif abs(gb) <= ftol:
        m0, g0 = b, gb
    else:
        for _ in range(max_iter):
            if b - a <= mtol:
                break
            mid = 0.5 * (a + b)
            gm = g(mid)
            if abs(gm) <= ftol:
                m0, g0 = mid, gm
                break
            if gm > 0:
                a, ga = mid, gm
            else:
                b, gb = mid, gm
        else:
            raise SolverError("level bisection exceeded the iteration cap")

    if m0 is not None:
        left = m_lo if abs(g_lo) <= ftol else _edge_polish(g, a, ga, m0, g0, m0, mtol, ftol, max_iter)
        right = m_hi if abs(g_hi) <= ftol else _edge_polish(g, b, gb, m0, g0, m0, mtol, ftol, max_iter)
        m_star = 0.5 * (left + right)
        r = g(m_star)
        if abs(r) > ftol:
            m_star, r = m0, g0
        return SweepResult(m_star, 0.0, (left, right), None, r)

    # Jump case: the zero is crossed by a downward jump of the z = 0 sweep.
    slack = 10.0 * mtol + 1e-14 * max(1.0, abs(a), abs(b))
    near = [c for c in np.asarray(candidates, dtype=float) if a - slack <= c <= b + slack]
    if not near:
        raise SolverError(
            "balance jumps near M=%.17g with no matching tie-break level" % (0.5 * (a + b))
        )
    mid_ab = 0.5 * (a + b)
    level = min(near, key=lambda v: abs(v - mid_ab))

    def h(zz):
        return balance(level, zz)

    h0 = h(0.0)
    h1 = h(1.0)
    if h0 < -ftol or h1 > ftol:
        raise SolverError("tie-break bracket invalid at M=%.17g" % level)
    za, ha, zb, hb = 0.0, h0, 1.0, h1
    z0 = hz0 = None
    if abs(ha) <= ftol:
        z0, hz0 = za, ha
    elif abs(hb) <= ftol:
        z0, hz0 = zb, hb
    else:
        for _ in range(max_iter):
            if zb - za <= 1e-15:
                raise SolverError("tie-break bisection collapsed at M=%.17g" % level)
            mid = 0.5 * (za + zb)
            hm = h(mid)
            if abs(hm) <= ftol:
                z0, hz0 = mid, hm
                break
            if hm > 0:
                za, ha = mid, hm
            else:
                zb, hb = mid, hm
        else:
            raise SolverError("tie-break bisection exceeded the iteration cap")
    zleft = 0.0 if abs(h0) <= ftol else _edge_polish(h, za, ha, z0, hz0, z0, 1e-15, ftol, max_iter)
    zright = 1.0 if abs(h1) <= ftol else _edge_polish(h, zb, hb, z0, hz0, z0, 1e-15, ftol, max_iter)
    z_star = 0.5 * (zleft + zright)
    r = h(z_star)
    if abs(r) > ftol:
        z_star, r = z0, hz0
    return SweepResult(level, z_star, None, (zleft, zright), r)


def solve_riemann(junction, rho0):
    """Solve the generalized Riemann problem for constant per-road data.

    Finds the level (M, z) zeroing the flux imbalance, then evaluates the
    per-road self-similar solutions at the junction ray to produce traces,
    ghost traces and junction fluxes. The flux vector is unique even when
    the level is not; interval-valued levels are reported at their midpoint.
    """
    rho0 = junction.validate_states(rho0)
    ftol = 1e-10 * max(junction.flux_scale, 1e-300)
    mtol = 1e-12 * (junction.m_hi - junction.m_lo)

    def bal(m, zz):
        return _xi_raw(junction, rho0, m, zz)

    res = solve_balance_sweep(
        bal, junction.m_lo, junction.m_hi, ftol, mtol, junction.tiebreak_levels
    )
    hat = hat_states(junction, res.m, res.z)
    nroads = junction.n + junction.m
    trace = np.empty(nroads)
    ghost = np.empty(nroads)
    flux = np.empty(nroads)
    for k, road in enumerate(junction.roads):
        if road.direction == "in":
            flux[k] = godunov_flux(road.flux, rho0[k], hat[k])
            trace[k] = self_similar_eval(road.flux, rho0[k], hat[k], 0.0, "from-left")
            ghost[k] = self_similar_eval(road.flux, rho0[k], hat[k], 0.0, "from-right")
        else:
            flux[k] = godunov_flux(road.flux, hat[k], rho0[k])
            trace[k] = self_similar_eval(road.flux, hat[k], rho0[k], 0.0, "from-right")
            ghost[k] = self_similar_eval(road.flux, hat[k], rho0[k], 0.0, "from-left")
    residual = float(np.sum(flux[: junction.n]) - np.sum(flux[junction.n :]))
    return JunctionSolution(
        m=float(res.m),
        z=float(res.z),
        hat_rho=hat,
        trace_rho=trace,
        trace_flux=flux,
        ghost_trace=ghost,
        incoming_count=junction.n,
        balance_residual=residual,
        m_edges=res.m_edges,
        z_edges=res.z_edges,
    )


def germ_dissipation(junction, rho1, rho2):
    """Kruzkov flux difference between two junction states.

    Nonnegative whenever both states are stationary under the Riemann map;
    strictly negative values certify that one of them is not.
    """
    rho1 = junction.validate_states(rho1)
    rho2 = junction.validate_states(rho2)
    total = 0.0
    for k, road in enumerate(junction.roads):
        term = kruzkov_flux(road.flux, rho1[k], rho2[k])
        total += term if road.direction == "in" else -term
    return total


def classify_state(junction, rho, tol=1e-9):
    """Classify a junction state as not-fixed, fixed-point or germ-member.

    Fixed means the Riemann map returns the state itself (trace equality up
    to tol). Germ membership additionally requires the branch condition: a
    road whose flux already agrees with the ghost flux, with the ghost on
    the outward branch, must itself sit on the outward branch. The labels
    are nested: every germ member is in particular a fixed point.
    """
    rho = junction.validate_states(rho)
    sol = solve_riemann(junction, rho)
    if np.max(np.abs(sol.trace_rho - rho)) > tol:
        return "not-fixed"
    ftol = tol * max(1.0, junction.flux_scale)
    for k, road in enumerate(junction.roads):
        same_flux = abs(road.flux(rho[k]) - road.flux(sol.hat_rho[k])) <= ftol
        if same_flux and road.branch.in_gamma_out(sol.hat_rho[k], tol=tol):
            if not road.branch.in_gamma_out(rho[k], tol=tol):
                return "fixed-point"
    return "germ-member"


def germ_project(junction, rho, tol=1e-9):
    """Push a state toward the germ by replacing mirror-side components.

    Solves the Riemann problem and substitutes the ghost state wherever the
    branch condition bites (equal fluxes, ghost on the outward branch, trace
    on the inward one). Applied to a trace vector this produces a germ
    candidate with the same flux vector.
    """
    rho = junction.validate_states(rho)
    sol = solve_riemann(junction, rho)
    out = sol.trace_rho.copy()
    ftol = tol * max(1.0, junction.flux_scale)
    for k, road in enumerate(junction.roads):
        same_flux = abs(road.flux(out[k]) - road.flux(sol.hat_rho[k])) <= ftol
        if (
            same_flux
            and road.branch.in_gamma_out(sol.hat_rho[k], tol=tol)
            and not road.branch.in_gamma_out(out[k], tol=tol)
        ):
            out[k] = sol.hat_rho[k]
    return out
