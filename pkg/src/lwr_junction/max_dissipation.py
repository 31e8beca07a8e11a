"""Junction coupling as a concave flux optimization.

The admissible junction fluxes maximize the entropy dissipation subject to
mass balance and per-road capacity boxes. For piecewise linear data the
optimality system reduces to the same monotone level sweep as the Riemann
solver, which is how the two routes are cross-checked. A grid search over
the feasible flux polytope gives a third, assumption-free reference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    EntropyPair,
    SolverError,
    entropy_flux_eval,
    godunov_flux,
    self_similar_eval,
)
from .junction import JunctionSolution, solve_balance_sweep

__all__ = [
    "FluxProgram",
    "build_flux_program",
    "solve_max_dissipation",
    "kkt_cases",
    "brute_force_max_dissipation",
    "recenter_entropy",
    "PiecewiseQuadratic",
    "holden_risebro_convert",
    "holden_risebro_invert",
]


@dataclass
class FluxProgram:
    """Data of the dissipation maximization in flux variables.

    caps[k] is the demand (incoming) or supply (outgoing) limit induced by
    the road datum: the full flux maximum when the datum already sits on
    the outward branch, the datum flux otherwise. The box 0 <= F <= cap
    together with mass balance defines the feasible set.
    """

    junction: object
    rho0: np.ndarray
    caps: np.ndarray

    def density_from_flux(self, k, flux):
        """Outward-branch density carrying the given flux on road k."""
        return self.junction.roads[k].branch.flux_inverse_out(flux)

    def objective_term(self, k, flux):
        """Signed entropy-flux value of road k at the given junction flux."""
        road = self.junction.roads[k]
        rho = road.branch.flux_inverse_out(float(flux))
        value = entropy_flux_eval(road.entropy, road.flux, rho)
        return value if road.direction == "in" else -value

    def objective(self, fluxes):
        """Total dissipation functional at a flux vector."""
        fluxes = np.asarray(fluxes, dtype=float)
        return float(sum(self.objective_term(k, fluxes[k]) for k in range(len(fluxes))))


def build_flux_program(junction, rho0):
    rho0 = junction.validate_states(rho0)
    caps = np.empty(junction.n + junction.m)
    for k, road in enumerate(junction.roads):
        if road.branch.in_gamma_out(rho0[k]):
            caps[k] = road.flux.f_max
        else:
            caps[k] = float(road.flux(rho0[k]))
    return FluxProgram(junction=junction, rho0=rho0, caps=caps)


def _assemble(junction, rho0, hat, m, z, m_edges=None, z_edges=None):
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
        m=float(m),
        z=float(z),
        hat_rho=hat,
        trace_rho=trace,
        trace_flux=flux,
        ghost_trace=ghost,
        incoming_count=junction.n,
        balance_residual=residual,
        m_edges=m_edges,
        z_edges=z_edges,
    )


def solve_max_dissipation(junction, rho0):
    """Maximize entropy dissipation over admissible junction fluxes.

    Requires every road entropy to be dissipation-compatible; the
    optimality system then reduces to the same scalar level sweep as the
    priority Riemann solver, with selections projected onto the outward
    branches and fluxes clamped at the capacity boxes. Returns a
    JunctionSolution whose hat states are the projected selections.
    """
    for road in junction.roads:
        if not road.dissipation_compatible:
            raise ValueError(
                "road %r entropy is not dissipation-compatible; the flux "
                "optimization needs the sign condition at the crest" % road.road_id
            )
    rho0 = junction.validate_states(rho0)
    program = build_flux_program(junction, rho0)
    caps = program.caps
    nroads = junction.n + junction.m

    if float(np.max(caps)) <= 0.0:
        hat = np.array([road.branch.zero_flux_state() for road in junction.roads])
        m_star = 0.5 * (junction.m_lo + junction.m_hi)
        return _assemble(junction, rho0, hat, m_star, 0.0)

    def selection(m, z):
        hat = np.empty(nroads)
        for k, road in enumerate(junction.roads):
            hat[k] = road.branch.project_out(road.priority.select(road.entropy, m, z))
        return hat

    def bal(m, z):
        hat = selection(m, z)
        total = 0.0
        for k, road in enumerate(junction.roads):
            clamped = min(float(road.flux(hat[k])), caps[k])
            total += clamped if road.direction == "in" else -clamped
        return total

    ftol = 1e-10 * max(junction.flux_scale, 1e-300)
    mtol = 1e-12 * (junction.m_hi - junction.m_lo)
    res = solve_balance_sweep(
        bal, junction.m_lo, junction.m_hi, ftol, mtol, junction.tiebreak_levels
    )
    hat = selection(res.m, res.z)
    solution = _assemble(junction, rho0, hat, res.m, res.z, res.m_edges, res.z_edges)
    if abs(solution.balance_residual) > 10.0 * ftol:
        raise SolverError(
            "optimization fluxes violate mass balance by %g" % solution.balance_residual
        )
    return solution


def kkt_cases(junction, rho0, solution, tol=1e-8):
    """Per-road optimality certificates at a computed solution.

    Each road is in exactly one of three cases determined by its flux
    position: 'interior' (strictly inside the box, level sandwiched by the
    one-sided entropy slopes at the selected density), 'capacity' (upper
    box active, one-sided condition), or 'zero' (lower box active, the
    opposite one-sided condition). Returns a list of dicts with a
    'satisfied' flag per road.
    """
    program = build_flux_program(junction, rho0)
    m = solution.m
    slope_scale = max(1.0, abs(junction.m_lo), abs(junction.m_hi))
    tol_m = tol * slope_scale
    ftol = tol * max(1.0, junction.flux_scale)
    out = []
    for k, road in enumerate(junction.roads):
        flux = float(solution.trace_flux[k])
        cap = float(program.caps[k])
        rho_sel = float(solution.hat_rho[k])
        lo_slope = road.entropy.minus(rho_sel)
        hi_slope = road.entropy.plus(rho_sel)
        incoming = road.direction == "in"
        if flux >= cap - ftol and cap <= ftol:
            case = "zero"
            ok = True
        elif flux >= cap - ftol:
            case = "capacity"
            ok = (m <= hi_slope + tol_m) if incoming else (m >= lo_slope - tol_m)
        elif flux <= ftol:
            case = "zero"
            ok = (m >= lo_slope - tol_m) if incoming else (m <= hi_slope + tol_m)
        else:
            case = "interior"
            ok = (lo_slope <= m + tol_m) and (m <= hi_slope + tol_m)
        out.append(
            {
                "road_id": road.road_id,
                "case": case,
                "satisfied": bool(ok),
                "flux": flux,
                "cap": cap,
                "level": float(m),
                "slope_lo": float(lo_slope),
                "slope_hi": float(hi_slope),
            }
        )
    return out


def _best_profile(tables):
    """Maximize the sum of one or two tables at each fixed index sum.

    Returns (profile, decode) where profile[s] is the best achievable sum
    and decode(s) the list of per-table indices attaining it.
    """
    if len(tables) == 1:
        t0 = tables[0]
        profile = np.asarray(t0, dtype=float)
        return profile, lambda s: [s]
    t0 = np.asarray(tables[0], dtype=float)
    t1 = np.asarray(tables[1], dtype=float)
    n0, n1 = len(t0), len(t1)
    size = n0 + n1 - 1
    profile = np.full(size, -np.inf)
    arg0 = np.zeros(size, dtype=int)
    for s in range(size):
        i_lo = max(0, s - n1 + 1)
        i_hi = min(n0 - 1, s)
        seg = t0[i_lo : i_hi + 1] + t1[s - i_hi : s - i_lo + 1][::-1]
        local = int(np.argmax(seg))
        profile[s] = seg[local]
        arg0[s] = i_lo + local
    return profile, lambda s: [int(arg0[s]), s - int(arg0[s])]


def brute_force_max_dissipation(junction, rho0, grid_n=800):
    """Grid search over the feasible flux polytope.

    Fluxes live on a common lattice of spacing max(cap)/grid_n so the mass
    balance is exact integer index arithmetic; per-road objective tables
    are combined with a best-profile-per-sum convolution. Supports up to
    four roads in total and needs dissipation-compatible entropies, like
    the optimization solver it cross-checks. Returns a dict with the best
    flux vector, the objective value and the lattice spacing.
    """
    if junction.n + junction.m > 4:
        raise ValueError("grid search supports at most four roads in total")
    rho0 = junction.validate_states(rho0)
    program = build_flux_program(junction, rho0)
    caps = program.caps
    cap_max = float(np.max(caps))
    nroads = junction.n + junction.m
    if cap_max <= 0.0:
        return {
            "fluxes": np.zeros(nroads),
            "objective": 0.0,
            "grid_n": grid_n,
            "delta": 0.0,
        }
    delta = cap_max / grid_n
    tables = []
    for k, road in enumerate(junction.roads):
        count = int(np.floor(caps[k] / delta + 1e-9))
        fluxes = delta * np.arange(count + 1)
        # Signed objective evaluated through the exact piecewise quadratic
        # in throughput coordinates; needs compatible entropies, like the
        # optimization solver itself.
        ghat = holden_risebro_convert(road.entropy, road.flux, road.direction)
        tables.append(np.atleast_1d(ghat(fluxes / road.flux.f_max)))
    in_profile, in_decode = _best_profile(tables[: junction.n])
    out_profile, out_decode = _best_profile(tables[junction.n :])
    common = min(len(in_profile), len(out_profile))
    totals = in_profile[:common] + out_profile[:common]
    s_star = int(np.argmax(totals))
    indices = in_decode(s_star) + out_decode(s_star)
    return {
        "fluxes": delta * np.asarray(indices, dtype=float),
        "objective": float(totals[s_star]),
        "grid_n": grid_n,
        "delta": delta,
    }


def recenter_entropy(flux, profile_knots=None, profile_values=None):
    """Entropy derivative built from a nondecreasing profile of rho - sigma.

    With no profile this is the identity, giving the quadratic entropy
    centered at the crest. A custom profile w must be nondecreasing with
    w <= 0 left of zero and w >= 0 right of it, which makes the resulting
    pair dissipation-compatible by construction.
    """
    sigma = flux.sigma
    a, b = flux.a, flux.b
    if profile_knots is None:
        knots = np.array([a, b])
        return EntropyPair(knots, knots - sigma, dissipation_compatible=True)
    w_x = np.asarray(profile_knots, dtype=float)
    w_v = np.asarray(profile_values, dtype=float)
    if w_x.ndim != 1 or w_x.shape != w_v.shape or w_x.size < 2:
        raise ValueError("profile needs matching 1-d knot and value arrays")
    if np.any(np.diff(w_x) < 0) or np.any(np.diff(w_v) < 0):
        raise ValueError("profile knots and values must be nondecreasing")
    span = max(1e-12, b - a)
    inner = (w_x + sigma > a + 1e-12 * span) & (w_x + sigma < b - 1e-12 * span)
    xs = np.concatenate(([a], w_x[inner] + sigma, [b]))
    vs = np.concatenate(
        (
            [np.interp(a - sigma, w_x, w_v)],
            w_v[inner],
            [np.interp(b - sigma, w_x, w_v)],
        )
    )
    pair = EntropyPair(xs, vs)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(vs))))
    if pair.minus(sigma) > tol or pair.plus(sigma) < -tol:
        raise ValueError("profile must change sign at zero to stay compatible")
    pair.dissipation_compatible = True
    return pair


class PiecewiseQuadratic:
    """Continuous piecewise quadratic on [0, 1] with one-sided derivatives.

    Stored per segment as the value at the left knot plus the derivative at
    both segment ends; the derivative is affine inside each segment.
    """

    def __init__(self, y_knots, values, d_left, d_right):
        self.y = np.asarray(y_knots, dtype=float)
        self.v = np.asarray(values, dtype=float)
        self.dl = np.asarray(d_left, dtype=float)
        self.dr = np.asarray(d_right, dtype=float)
        if self.y.ndim != 1 or self.y.size < 2:
            raise ValueError("need at least two knots")
        if np.any(np.diff(self.y) <= 0):
            raise ValueError("knots must be strictly increasing")
        if self.v.shape != self.y.shape:
            raise ValueError("values must match knots")
        if self.dl.shape != (self.y.size - 1,) or self.dr.shape != self.dl.shape:
            raise ValueError("need one derivative pair per segment")

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        lo, hi = self.y[0], self.y[-1]
        slack = 1e-9 * max(1.0, hi - lo)
        if np.any(t_arr < lo - slack) or np.any(t_arr > hi + slack):
            raise ValueError("argument outside [%g, %g]" % (lo, hi))
        tc = np.clip(t_arr, lo, hi)
        i = np.clip(np.searchsorted(self.y, tc, side="right") - 1, 0, self.y.size - 2)
        w = self.y[i + 1] - self.y[i]
        s = tc - self.y[i]
        curve = 0.5 * (self.dr[i] - self.dl[i]) / w
        out = self.v[i] + self.dl[i] * s + curve * s * s
        if np.isscalar(t):
            return float(out)
        return out

    def derivative(self, t, side="plus"):
        if side not in ("plus", "minus"):
            raise ValueError("side must be 'plus' or 'minus'")
        t = float(t)
        lo, hi = self.y[0], self.y[-1]
        t = min(max(t, lo), hi)
        if side == "plus":
            if t >= hi:
                return float(self.dr[-1])
            i = int(np.searchsorted(self.y, t, side="right")) - 1
        else:
            if t <= lo:
                return float(self.dl[0])
            i = int(np.searchsorted(self.y, t, side="left")) - 1
        i = min(max(i, 0), self.y.size - 2)
        w = self.y[i + 1] - self.y[i]
        s = t - self.y[i]
        return float(self.dl[i] + (self.dr[i] - self.dl[i]) * s / w)

    def is_concave(self, tol=1e-9):
        seq = np.empty(2 * self.dl.size)
        seq[0::2] = self.dl
        seq[1::2] = self.dr
        scale = max(1.0, float(np.max(np.abs(seq))))
        return bool(np.all(np.diff(seq) <= tol * scale))


def holden_risebro_convert(pair, flux, direction):
    """Entropy flux in normalized throughput coordinates on one branch.

    Maps y in [0, 1] to the outward-branch density carrying flux y * f_max
    and evaluates the signed entropy flux there (positive sign incoming,
    negative outgoing). The result is piecewise quadratic with derivative
    +/- f_max * eta'(rho(y)), hence concave exactly when the entropy slope
    is monotone along the branch. Requires the entropy slope to have the
    dissipation-compatible sign on the outward branch.
    """
    if direction not in ("in", "out"):
        raise ValueError("direction must be 'in' or 'out'")
    sigma = flux.sigma
    fmax = flux.f_max
    tol = 1e-12 * max(1.0, abs(pair.vs[0]), abs(pair.vs[-1]))
    if direction == "in":
        if pair.plus(sigma) < -tol:
            raise ValueError("entropy slope must be nonnegative beyond the crest")
        lo, hi = sigma, flux.b
    else:
        if pair.minus(sigma) > tol:
            raise ValueError("entropy slope must be nonpositive before the crest")
        lo, hi = flux.a, sigma
    nodes = np.unique(
        np.concatenate(
            (
                [lo, hi],
                flux.x[(flux.x > lo) & (flux.x < hi)],
                pair.xs[(pair.xs > lo) & (pair.xs < hi)],
            )
        )
    )
    g_vals = np.array([entropy_flux_eval(pair, flux, r) for r in nodes])
    y_vals = flux(nodes) / fmax
    sign = 1.0 if direction == "in" else -1.0
    segs = []
    for i in range(nodes.size - 1):
        p, q = nodes[i], nodes[i + 1]
        if direction == "in":
            y0, y1 = y_vals[i + 1], y_vals[i]
            v0, v1 = sign * g_vals[i + 1], sign * g_vals[i]
            d0 = sign * fmax * pair.minus(q)
            d1 = sign * fmax * pair.plus(p)
        else:
            y0, y1 = y_vals[i], y_vals[i + 1]
            v0, v1 = sign * g_vals[i], sign * g_vals[i + 1]
            d0 = sign * fmax * pair.plus(p)
            d1 = sign * fmax * pair.minus(q)
        segs.append((y0, y1, v0, v1, d0, d1))
    segs.sort(key=lambda s: s[0])
    y_knots = np.array([s[0] for s in segs] + [segs[-1][1]])
    values = np.array([s[2] for s in segs] + [segs[-1][3]])
    d_left = np.array([s[4] for s in segs])
    d_right = np.array([s[5] for s in segs])
    return PiecewiseQuadratic(y_knots, values, d_left, d_right)


def holden_risebro_invert(ghat, flux, direction):
    """Recover an entropy derivative from throughput coordinates.

    Inverts the convert map on the outward branch and extends the slope
    constantly across the crest. Rejects non-concave inputs, which cannot
    come from a convex entropy. Information on the inward branch is not
    recoverable and the extension is the canonical choice.
    """
    if direction not in ("in", "out"):
        raise ValueError("direction must be 'in' or 'out'")
    if not ghat.is_concave():
        raise ValueError("throughput profile must be concave to invert")
    sigma = flux.sigma
    fmax = flux.f_max
    from .core import BranchDecomposition

    branch = BranchDecomposition(flux, direction)
    lo, hi = (sigma, flux.b) if direction == "in" else (flux.a, sigma)
    inner_y = ghat.y[(ghat.y > 1e-14) & (ghat.y < 1.0 - 1e-14)]
    preimages = np.array([branch.flux_inverse_out(y * fmax) for y in inner_y])
    nodes = np.unique(
        np.concatenate(([lo, hi], flux.x[(flux.x > lo) & (flux.x < hi)], preimages))
    )
    sign = 1.0 if direction == "in" else -1.0

    def slope(rho, rho_side):
        y = flux(rho) / fmax
        if direction == "in":
            y_side = "minus" if rho_side == "plus" else "plus"
        else:
            y_side = rho_side
        return sign * ghat.derivative(y, side=y_side) / fmax

    def jumps(u, v):
        return abs(u - v) > 1e-12 * max(1.0, abs(u), abs(v))

    xs = []
    vs = []
    if direction == "in":
        start = slope(nodes[0], "plus")
        xs.extend([flux.a, nodes[0]])
        vs.extend([start, start])
        for i in range(1, nodes.size):
            vm = slope(nodes[i], "minus")
            xs.append(nodes[i])
            vs.append(vm)
            if i < nodes.size - 1:
                vp = slope(nodes[i], "plus")
                if jumps(vm, vp):
                    xs.append(nodes[i])
                    vs.append(vp)
    else:
        xs.append(nodes[0])
        vs.append(slope(nodes[0], "plus"))
        for i in range(1, nodes.size - 1):
            vm = slope(nodes[i], "minus")
            xs.append(nodes[i])
            vs.append(vm)
            vp = slope(nodes[i], "plus")
            if jumps(vm, vp):
                xs.append(nodes[i])
                vs.append(vp)
        end = slope(nodes[-1], "minus")
        xs.extend([nodes[-1], flux.b])
        vs.extend([end, end])
    vs = np.maximum.accumulate(np.asarray(vs, dtype=float))
    return EntropyPair(np.asarray(xs, dtype=float), vs)
