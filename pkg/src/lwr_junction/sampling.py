"""Random model data for cross-checks and stress tests.

Everything draws from a caller-provided numpy Generator so suites are
reproducible from a single seed.
"""

from __future__ import annotations

import numpy as np

from .core import EntropyPair, FluxFunction
from .junction import Junction, Road, classify_state, germ_project, solve_riemann

__all__ = [
    "random_flux",
    "random_entropy",
    "random_junction",
    "random_state",
    "sample_fixed_points",
    "sample_germ_members",
]


def random_flux(rng, domain=(0.0, 1.0), max_kinks=3, f_scale=1.0):
    """Strictly bell-shaped piecewise linear flux on the given domain.

    Draws interior breakpoints with a minimum spacing and strictly
    decreasing slopes, then rescales the rising and falling groups
    separately so the endpoint values vanish at a random peak height.
    """
    a, b = float(domain[0]), float(domain[1])
    span = b - a
    for _ in range(100):
        kinks = int(rng.integers(1, max_kinks + 1))
        xs = np.sort(rng.uniform(a, b, size=kinks))
        knots = np.concatenate(([a], xs, [b]))
        widths = np.diff(knots)
        if np.min(widths) < 0.02 * span / (kinks + 1):
            continue
        segments = kinks + 1
        rising = int(rng.integers(1, segments))
        pos = np.sort(rng.uniform(0.2, 4.0, size=rising))[::-1]
        neg = np.sort(rng.uniform(-4.0, -0.2, size=segments - rising))[::-1]
        slopes = np.concatenate((pos, neg))
        if np.any(np.diff(slopes) > -1e-6):
            continue
        rise = float(np.sum(slopes[:rising] * widths[:rising]))
        drop = float(-np.sum(slopes[rising:] * widths[rising:]))
        peak = f_scale * rng.uniform(0.5, 1.5)
        slopes[:rising] *= peak / rise
        slopes[rising:] *= peak / drop
        ys = np.concatenate(([0.0], np.cumsum(slopes * widths)))
        ys[-1] = 0.0
        try:
            return FluxFunction(np.column_stack((knots, ys)))
        except ValueError:
            continue
    raise RuntimeError("failed to draw a valid flux in 100 attempts")


def random_entropy(rng, flux, style="strict"):
    """Entropy derivative adapted to the flux, compatible by construction.

    Styles: 'strict' is strictly increasing through zero at the crest
    (strictly convex entropy); 'plateau' flattens a same-sign band of a
    strict draw; 'jump' inserts an upward jump at a random knot.
    """
    a, b, sigma = flux.a, flux.b, flux.sigma
    extra = int(rng.integers(0, 4))
    xs = np.unique(
        np.concatenate(([a, b, sigma], rng.uniform(a, b, size=extra)))
    )
    i_sigma = int(np.searchsorted(xs, sigma))
    gaps = rng.uniform(0.1, 2.0, size=xs.size - 1)
    vs = np.empty_like(xs)
    vs[i_sigma] = 0.0
    for i in range(i_sigma + 1, xs.size):
        vs[i] = vs[i - 1] + gaps[i - 1]
    for i in range(i_sigma - 1, -1, -1):
        vs[i] = vs[i + 1] - gaps[i]
    if style == "strict":
        return EntropyPair(xs, vs, dissipation_compatible=True)
    if style == "plateau":
        # Flatten a band that stays on one side of the crest so the sign
        # condition there survives; flattening to the band minimum keeps
        # the sequence nondecreasing.
        bands = [
            (i, j)
            for i in range(xs.size)
            for j in range(i + 1, xs.size)
            if i >= i_sigma or j < i_sigma
        ]
        if bands:
            i, j = bands[int(rng.integers(0, len(bands)))]
            vs = vs.copy()
            vs[i : j + 1] = vs[i]
        return EntropyPair(xs, vs, dissipation_compatible=True)
    if style == "jump":
        # Upward jump at or beyond the crest; the crest values themselves
        # are untouched, so compatibility survives.
        k = int(rng.integers(i_sigma, xs.size))
        lift = float(rng.uniform(0.2, 1.0))
        xs2 = np.insert(xs, k + 1, xs[k])
        vs2 = np.insert(vs, k + 1, vs[k] + lift)
        vs2[k + 2 :] += lift
        return EntropyPair(xs2, vs2, dissipation_compatible=True)
    raise ValueError("unknown entropy style %r" % (style,))


def random_junction(rng, n=None, m=None, max_roads=3, entropy_style="strict"):
    """Random junction with bell fluxes and compatible entropies."""
    if n is None:
        n = int(rng.integers(1, max_roads + 1))
    if m is None:
        m = int(rng.integers(1, max_roads + 1))
    length = float(rng.uniform(0.5, 2.0))
    incoming = []
    outgoing = []
    for i in range(n):
        flux = random_flux(rng, domain=(0.0, length))
        pair = random_entropy(rng, flux, style=entropy_style)
        incoming.append(Road("in%d" % (i + 1), "in", flux, pair))
    for j in range(m):
        flux = random_flux(rng, domain=(0.0, length))
        pair = random_entropy(rng, flux, style=entropy_style)
        outgoing.append(Road("out%d" % (j + 1), "out", flux, pair))
    return Junction(incoming, outgoing)


def random_state(rng, junction):
    """Uniform draw of one density per road."""
    return np.array(
        [rng.uniform(road.flux.a, road.flux.b) for road in junction.roads]
    )


def sample_fixed_points(junction, rng, count):
    """Fixed points of the Riemann map: traces of random data."""
    out = np.empty((count, junction.n + junction.m))
    for i in range(count):
        sol = solve_riemann(junction, random_state(rng, junction))
        out[i] = sol.trace_rho
    return out


def sample_germ_members(junction, rng, count, max_tries=None):
    """Verified germ members obtained by projecting random traces."""
    if max_tries is None:
        max_tries = 20 * count + 100
    members = []
    for _ in range(max_tries):
        if len(members) >= count:
            break
        candidate = germ_project(junction, random_state(rng, junction))
        if classify_state(junction, candidate) == "germ-member":
            members.append(candidate)
    if len(members) < count:
        raise RuntimeError(
            "collected only %d of %d germ members" % (len(members), count)
        )
    return np.asarray(members)
