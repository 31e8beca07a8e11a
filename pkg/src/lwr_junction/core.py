"""Piecewise-linear flux functions, entropy pairs and Riemann building blocks.

Everything downstream (the junction solvers, the kinetic scheme, the network
stepper) consumes the small vocabulary defined here: bell-shaped piecewise
linear fluxes, convex entropies stored through their derivative, Kruzkov
fluxes, the kinetic equilibrium indicator chi with its exact moments, and
exact evaluation of self-similar Riemann solutions.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "SolverError",
    "FluxFunction",
    "EntropyPair",
    "BranchDecomposition",
    "godunov_flux",
    "entropy_flux_eval",
    "kruzkov_flux",
    "chi_moment",
    "self_similar_eval",
    "quadratic_entropy",
    "neg_flux_entropy",
    "is_dissipation_compatible",
]

# Slack used when checking that a value lies in a closed interval. Values
# reaching these checks come out of float arithmetic (bisection midpoints,
# cell averages), so an exact containment test would be too brittle.
_DOMAIN_SLACK = 1e-9


class SolverError(RuntimeError):
    """An iterative solve failed to converge or lost its bracket.

    Unreachable for valid inputs in normal operation; raising instead of
    returning garbage keeps the CLI exit-code contract honest.
    """


def _clip_to(value, lo, hi, what):
    """Validate that value lies in [lo, hi] up to slack, then clamp it."""
    v = np.asarray(value, dtype=float)
    slack = _DOMAIN_SLACK * max(1.0, abs(lo), abs(hi))
    if np.any(v < lo - slack) or np.any(v > hi + slack):
        raise ValueError(
            "%s must lie in [%g, %g], got %s" % (what, lo, hi, np.min(v) if np.any(v < lo - slack) else np.max(v))
        )
    return np.clip(v, lo, hi)


class FluxFunction:
    """Concave piecewise-linear bell-shaped flux on a closed interval [a, b].

    Breakpoints are (rho, f) pairs with strictly increasing rho and strictly
    decreasing segment slopes; f vanishes at both endpoints and no segment is
    flat, so there is a unique interior maximizer ``sigma`` sitting at a
    breakpoint.

    Attributes:
        x: breakpoint densities, shape (K,).
        y: flux values at the breakpoints.
        slopes: per-segment slopes, strictly decreasing, never zero.
        sigma: the unique argmax of f.
        f_max: f(sigma).
        lipschitz: max |slope|.
    """

    def __init__(self, breakpoints):
        pts = np.atleast_2d(np.asarray(breakpoints, dtype=float))
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
            raise ValueError("need at least three (rho, f) breakpoints")
        x = pts[:, 0].copy()
        y = pts[:, 1].copy()
        if not np.all(np.diff(x) > 0):
            raise ValueError("breakpoint densities must be strictly increasing")
        if y[0] != 0.0 or y[-1] != 0.0:
            raise ValueError("flux must vanish at both domain endpoints")
        slopes = np.diff(y) / np.diff(x)
        bad = np.flatnonzero(np.diff(slopes) >= 0)
        if bad.size:
            k = int(bad[0])
            raise ValueError(
                "segment slopes must be strictly decreasing; segments %d and %d "
                "have slopes %g and %g" % (k, k + 1, slopes[k], slopes[k + 1])
            )
        if slopes[0] <= 0.0 or slopes[-1] >= 0.0 or np.any(slopes == 0.0):
            raise ValueError(
                "flux must strictly rise from a and strictly fall into b "
                "with no flat segment"
            )
        self.x = x
        self.y = y
        self.slopes = slopes
        k = int(np.argmax(slopes < 0))  # first strictly negative slope
        self._sigma_index = k
        self.sigma = float(x[k])
        self.f_max = float(y[k])
        self.lipschitz = float(np.max(np.abs(slopes)))

    @property
    def a(self):
        return float(self.x[0])

    @property
    def b(self):
        return float(self.x[-1])

    def __call__(self, rho):
        r = _clip_to(rho, self.a, self.b, "density")
        out = np.interp(r, self.x, self.y)
        return float(out) if np.isscalar(rho) or np.ndim(rho) == 0 else out

    def check_domain(self, rho, what="density"):
        """Validate rho against [a, b] (with slack) and return it clamped."""
        r = _clip_to(rho, self.a, self.b, what)
        return float(r) if np.ndim(rho) == 0 else r

    def slope_minus(self, rho):
        """One-sided derivative f'(rho-); at rho = a returns the first slope."""
        r = self.check_domain(rho)
        i = int(np.searchsorted(self.x, r, side="left"))
        return float(self.slopes[max(i - 1, 0)])

    def slope_plus(self, rho):
        """One-sided derivative f'(rho+); at rho = b returns the last slope."""
        r = self.check_domain(rho)
        i = int(np.searchsorted(self.x, r, side="right"))
        return float(self.slopes[min(i - 1, len(self.slopes) - 1)] if i > 0 else self.slopes[0])

    def max_on(self, lo, hi):
        """Exact max of f over [lo, hi] (lo <= hi assumed)."""
        if lo <= self.sigma <= hi:
            return self.f_max
        return float(max(self(lo), self(hi)))

    def min_on(self, lo, hi):
        """Exact min of f over [lo, hi]; by concavity it sits at an endpoint."""
        return float(min(self(lo), self(hi)))

    def inverse_increasing(self, flux_value):
        """Preimage of a flux value on the rising branch [a, sigma]."""
        fv = _clip_to(flux_value, 0.0, self.f_max, "flux value")
        k = self._sigma_index
        out = np.interp(fv, self.y[: k + 1], self.x[: k + 1])
        return float(out) if np.ndim(flux_value) == 0 else out

    def inverse_decreasing(self, flux_value):
        """Preimage of a flux value on the falling branch [sigma, b]."""
        fv = _clip_to(flux_value, 0.0, self.f_max, "flux value")
        k = self._sigma_index
        yy = self.y[k:][::-1]
        xx = self.x[k:][::-1]
        out = np.interp(fv, yy, xx)
        return float(out) if np.ndim(flux_value) == 0 else out

    def nodes_between(self, lo, hi):
        """Breakpoints strictly inside (lo, hi), with lo and hi appended."""
        inner = self.x[(self.x > lo) & (self.x < hi)]
        return np.concatenate(([lo], inner, [hi]))


class EntropyPair:
    """Convex entropy stored through its nondecreasing derivative.

    The derivative is piecewise linear on [a, b]; jumps are encoded by
    repeating a knot density with two values. One-sided limits are queryable
    everywhere, with the boundary conventions eta'(a-) = -inf and
    eta'(b+) = +inf. ``flux_offset`` is the entropy-flux value at the
    reference density (zero clamped into the domain) and defaults to 0 so
    that network compatibility holds automatically.

    Args:
        knots_rho: nondecreasing densities, first strictly below last.
        knots_value: nondecreasing derivative values at the knots.
        flux_offset: entropy-flux value at the reference density.
        dissipation_compatible: optional tri-state flag; pass True only when
            the derivative changes sign at the flux maximizer of the road the
            pair will be attached to (checked by is_dissipation_compatible).
    """

    def __init__(self, knots_rho, knots_value, flux_offset=0.0, dissipation_compatible=None):
        xs = np.asarray(knots_rho, dtype=float)
        vs = np.asarray(knots_value, dtype=float)
        if xs.ndim != 1 or xs.shape != vs.shape or xs.size < 2:
            raise ValueError("need matching 1-d knot arrays with at least two knots")
        if np.any(np.diff(xs) < 0):
            raise ValueError("knot densities must be nondecreasing")
        if xs[0] >= xs[-1]:
            raise ValueError("entropy derivative needs a nondegenerate domain")
        if np.any(np.diff(vs) < 0):
            raise ValueError("entropy derivative must be nondecreasing (convexity)")
        self.xs = xs
        self.vs = vs
        self.flux_offset = float(flux_offset)
        self.dissipation_compatible = dissipation_compatible

    @property
    def a(self):
        return float(self.xs[0])

    @property
    def b(self):
        return float(self.xs[-1])

    def minus(self, rho):
        """Left limit eta'(rho-); -inf at the left endpoint by convention."""
        r = float(_clip_to(rho, self.a, self.b, "density"))
        if r <= self.a:
            return -np.inf
        i = int(np.searchsorted(self.xs, r, side="left"))
        if i < len(self.xs) and self.xs[i] == r:
            return float(self.vs[i])
        x0, x1 = self.xs[i - 1], self.xs[i]
        v0, v1 = self.vs[i - 1], self.vs[i]
        return float(v0 + (v1 - v0) * (r - x0) / (x1 - x0))

    def plus(self, rho):
        """Right limit eta'(rho+); +inf at the right endpoint by convention."""
        r = float(_clip_to(rho, self.a, self.b, "density"))
        if r >= self.b:
            return np.inf
        i = int(np.searchsorted(self.xs, r, side="right"))
        if self.xs[i - 1] == r:
            return float(self.vs[i - 1])
        x0, x1 = self.xs[i - 1], self.xs[i]
        v0, v1 = self.vs[i - 1], self.vs[i]
        return float(v0 + (v1 - v0) * (r - x0) / (x1 - x0))

    def level_set(self, m):
        """Endpoints of S(M) = {rho : eta'(rho-) <= M <= eta'(rho+)}.

        Never empty thanks to the boundary conventions; returns (lo, hi).
        """
        xs, vs = self.xs, self.vs
        # lo = min{rho : eta'(rho+) >= M}
        i = int(np.searchsorted(vs, m, side="left"))
        if i == len(vs):
            lo = self.b
        elif i == 0:
            lo = self.a
        elif xs[i] == xs[i - 1]:
            lo = float(xs[i])
        else:
            lo = float(xs[i - 1] + (xs[i] - xs[i - 1]) * (m - vs[i - 1]) / (vs[i] - vs[i - 1]))
        # hi = max{rho : eta'(rho-) <= M}
        j = int(np.searchsorted(vs, m, side="right"))
        if j == 0:
            hi = self.a
        elif j == len(vs):
            hi = self.b
        elif xs[j] == xs[j - 1]:
            hi = float(xs[j])
        else:
            hi = float(xs[j - 1] + (xs[j] - xs[j - 1]) * (m - vs[j - 1]) / (vs[j] - vs[j - 1]))
        return lo, hi

    def flat_levels(self):
        """Values the derivative assumes on nondegenerate flat segments.

        These are the only levels where a balance sweep over M can jump, so
        the junction solvers use them as tie-break candidates.
        """
        flat = (np.diff(self.xs) > 0) & (np.diff(self.vs) == 0)
        return np.unique(self.vs[:-1][flat])

    def antiderivative(self, rho, ref=None):
        """Exact integral of the derivative from ref (default: 0 clamped
        into the domain) to rho; this recovers eta(rho) - eta(ref)."""
        if ref is None:
            ref = min(max(0.0, self.a), self.b)
        r = float(_clip_to(rho, self.a, self.b, "density"))
        ref = float(_clip_to(ref, self.a, self.b, "reference density"))
        lo, hi = (ref, r) if ref <= r else (r, ref)
        knots = np.unique(np.concatenate((self.xs[(self.xs > lo) & (self.xs < hi)], [lo, hi])))
        total = 0.0
        for u, v in zip(knots[:-1], knots[1:]):
            total += 0.5 * (self.plus(u) + self.minus(v)) * (v - u)
        return total if ref <= r else -total


def quadratic_entropy(domain, center=0.0):
    """Quadratic entropy eta(rho) = (rho - center)^2 / 2, i.e. eta' = rho - center."""
    a, b = float(domain[0]), float(domain[1])
    if not a < b:
        raise ValueError("domain must be a nondegenerate interval")
    return EntropyPair([a, b], [a - center, b - center])


def neg_flux_entropy(flux):
    """The entropy eta = -f; its derivative -f' is nondecreasing by concavity
    of f and jumps at every flux breakpoint."""
    xs = []
    vs = []
    for k, s in enumerate(flux.slopes):
        xs.extend([flux.x[k], flux.x[k + 1]])
        vs.extend([-s, -s])
    return EntropyPair(xs, vs, dissipation_compatible=True)


def is_dissipation_compatible(pair, flux, tol=1e-12):
    """Whether eta' * f' <= 0 a.e. on [a, b].

    For a convex entropy on a bell-shaped flux this reduces to the sign
    change of eta' happening at sigma: eta'(sigma-) <= 0 <= eta'(sigma+).
    """
    s = flux.sigma
    return pair.minus(s) <= tol and pair.plus(s) >= -tol


class BranchDecomposition:
    """Partition of a road's density range by characteristic direction.

    gamma_in collects the states whose characteristics travel toward the
    junction, gamma_out the complementary closed set whose characteristics
    leave it; which half-line is which depends on the travel direction.
    On gamma_out the flux is strictly monotone (decreasing for an incoming
    road, increasing for an outgoing one), so it is invertible there.
    """

    def __init__(self, flux, direction):
        if direction not in ("in", "out"):
            raise ValueError("direction must be 'in' or 'out'")
        self.flux = flux
        self.direction = direction
        self.sigma = flux.sigma

    @property
    def gamma_in(self):
        """(lo, hi, lo_closed, hi_closed) of the inward branch."""
        f = self.flux
        if self.direction == "in":
            return (f.a, f.sigma, True, False)
        return (f.sigma, f.b, False, True)

    @property
    def gamma_out(self):
        """(lo, hi, lo_closed, hi_closed) of the outward branch."""
        f = self.flux
        if self.direction == "in":
            return (f.sigma, f.b, True, True)
        return (f.a, f.sigma, True, True)

    def in_gamma_out(self, rho, tol=0.0):
        if self.direction == "in":
            return rho >= self.sigma - tol
        return rho <= self.sigma + tol

    def in_gamma_in(self, rho, tol=0.0):
        if self.direction == "in":
            return rho < self.sigma + tol
        return rho > self.sigma - tol

    def project_out(self, rho):
        """Clamp a density onto gamma_out."""
        if self.direction == "in":
            return max(rho, self.sigma)
        return min(rho, self.sigma)

    def zero_flux_state(self):
        """The unique zero-flux density on gamma_out."""
        return self.flux.b if self.direction == "in" else self.flux.a

    def flux_inverse_out(self, flux_value):
        """Inverse of f restricted to gamma_out."""
        if self.direction == "in":
            return self.flux.inverse_decreasing(flux_value)
        return self.flux.inverse_increasing(flux_value)


def godunov_flux(f, left, right):
    """Exact Godunov numerical flux for a concave bell-shaped f.

    Equals min of f over [left, right] when left <= right and max over
    [right, left] otherwise. Accepts scalars or arrays.
    """
    l = _clip_to(left, f.a, f.b, "left state")
    r = _clip_to(right, f.a, f.b, "right state")
    fl = np.interp(l, f.x, f.y)
    fr = np.interp(r, f.x, f.y)
    rising = np.minimum(fl, fr)
    falling = np.where((r <= f.sigma) & (f.sigma <= l), f.f_max, np.maximum(fl, fr))
    out = np.where(l <= r, rising, falling)
    if np.ndim(left) == 0 and np.ndim(right) == 0:
        return float(out)
    return out


def kruzkov_flux(f, rho, k):
    """Kruzkov entropy flux sgn(rho - k) * (f(rho) - f(k)), with sgn(0) = 0."""
    r = f.check_domain(rho)
    kk = f.check_domain(k, "reference state")
    return float(np.sign(r - kk) * (f(r) - f(kk)))


def entropy_flux_eval(pair, f, rho):
    """Entropy flux G(rho): exact integral of eta' * f' from the reference
    density (zero clamped into the domain) plus the stored offset.

    Both factors are piecewise linear, so the integrand is piecewise linear
    between merged knots and the trapezoid rule per segment is exact.
    """
    r = f.check_domain(rho)
    ref = min(max(0.0, f.a), f.b)
    lo, hi = (ref, r) if ref <= r else (r, ref)
    knots = np.unique(np.concatenate((
        f.x[(f.x > lo) & (f.x < hi)],
        pair.xs[(pair.xs > lo) & (pair.xs < hi)],
        [lo, hi],
    )))
    total = 0.0
    for u, v in zip(knots[:-1], knots[1:]):
        if v <= u:
            continue
        fslope = f.slope_plus(u)
        total += fslope * 0.5 * (pair.plus(u) + pair.minus(v)) * (v - u)
    if r < ref:
        total = -total
    return total + pair.flux_offset


def chi_moment(rho, weight, f=None, pair=None):
    """Exact moments of the equilibrium indicator chi(rho, .).

    chi(rho, xi) is +1 for xi between 0 and rho when rho > 0, -1 when
    rho < 0, and 0 elsewhere, so its moments close in terms of endpoint
    values and no quadrature is needed:

        unit weight              -> rho
        weight 'flux_derivative' -> f(rho) - f(0)
        weight 'entropy_derivative' -> eta(rho) - eta(0)

    The flux and entropy weights require 0 to lie in the domain.
    """
    r = float(rho)
    if weight == "unit":
        if f is not None:
            r = f.check_domain(r)
        return r
    if weight == "flux_derivative":
        if f is None:
            raise ValueError("flux weight needs a FluxFunction")
        if not (f.a <= 0.0 <= f.b):
            raise ValueError("flux weight needs 0 inside the flux domain")
        r = f.check_domain(r)
        return float(f(r) - f(0.0))
    if weight == "entropy_derivative":
        if pair is None:
            raise ValueError("entropy weight needs an EntropyPair")
        if not (pair.a <= 0.0 <= pair.b):
            raise ValueError("entropy weight needs 0 inside the entropy domain")
        return pair.antiderivative(r, ref=0.0)
    raise ValueError("unknown weight %r" % (weight,))


def self_similar_eval(f, rho_left, rho_right, speed, side="from-left"):
    """Value of the self-similar Riemann solution at the ray x/t = speed.

    For concave f the solution is a single admissible shock when
    rho_left <= rho_right and a fan of contact discontinuities otherwise.
    ``side`` selects the physical one-sided limit of the profile at the ray;
    it only matters on rays carrying a discontinuity.
    """
    if side in ("from-left", "left"):
        from_left = True
    elif side in ("from-right", "right"):
        from_left = False
    else:
        raise ValueError("side must be 'from-left' or 'from-right'")
    rl = f.check_domain(rho_left, "left state")
    rr = f.check_domain(rho_right, "right state")
    if rl == rr:
        return rl
    if rl < rr:
        s = (f(rr) - f(rl)) / (rr - rl)
        if speed < s or (speed == s and from_left):
            return rl
        return rr
    # fan between rr < rl: contacts at the segment slopes of f on [rr, rl]
    nodes = f.nodes_between(rr, rl)
    ms = np.diff(np.interp(nodes, f.x, f.y)) / np.diff(nodes)
    if from_left:
        count = int(np.count_nonzero(ms >= speed))
    else:
        count = int(np.count_nonzero(ms > speed))
    return float(nodes[count])
