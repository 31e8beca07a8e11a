"""Bundled demonstration junction: two incoming and two outgoing roads.

The two incoming roads share a symmetric tent flux; the outgoing ones
have their crests at one quarter and three quarters of the density range.
With the data below the junction is driven by both incoming roads at a
quarter density against empty outgoing roads.
"""

from __future__ import annotations

import numpy as np

from .core import FluxFunction, neg_flux_entropy, quadratic_entropy
from .junction import Junction, Road
from .max_dissipation import recenter_entropy

__all__ = ["table1_junction", "table1_data"]


def _fluxes():
    f_in = [[0.0, 0.0], [0.5, 1.0], [1.0, 0.0]]
    f3 = [[0.0, 0.0], [0.25, 1.0], [1.0, 0.0]]
    f4 = [[0.0, 0.0], [0.75, 1.0], [1.0, 0.0]]
    return (
        FluxFunction(f_in),
        FluxFunction(f_in),
        FluxFunction(f3),
        FluxFunction(f4),
    )


def table1_junction(entropy="quadratic"):
    """Demo junction with a selectable entropy family.

    'quadratic' gives every road the same linear entropy slope (not
    dissipation-compatible, deliberately), 'neg_flux' uses the negative
    flux of each road, 'recentered' shifts the quadratic slope to vanish
    at each crest, which is compatible by construction.
    """
    fluxes = _fluxes()
    roads = []
    for k, flux in enumerate(fluxes):
        if entropy == "quadratic":
            pair = quadratic_entropy((flux.a, flux.b), center=0.0)
        elif entropy == "neg_flux":
            pair = neg_flux_entropy(flux)
        elif entropy == "recentered":
            pair = recenter_entropy(flux)
        else:
            raise ValueError(
                "entropy must be 'quadratic', 'neg_flux' or 'recentered', got %r"
                % (entropy,)
            )
        direction = "in" if k < 2 else "out"
        roads.append(Road(str(k + 1), direction, flux, pair))
    return Junction(roads[:2], roads[2:])


def table1_data():
    """Riemann datum driving the demo junction."""
    return np.array([0.25, 0.25, 0.0, 0.0])
