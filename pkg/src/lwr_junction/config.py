"""Scenario configuration: YAML parsing, validation and model building.

A scenario file describes the junction topology (fluxes and entropies per
road), per-road initial data, solver settings and the output directory.
Validation errors raise ConfigError with the offending field path in the
message, which the CLI maps to exit code 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import yaml

from .core import EntropyPair, FluxFunction, neg_flux_entropy, quadratic_entropy
from .junction import Junction, LinearPriority, Road

__all__ = ["ConfigError", "ScenarioConfig"]

_SOLVER_DEFAULTS = {
    "scheme": "godunov",
    "dx": 0.005,
    "dxi": 0.005,
    "cfl": 0.9,
    "epsilon": 1e-3,
    "t_end": 0.2,
    "truncation": 1.0,
}


class ConfigError(ValueError):
    """Invalid scenario input; the message names the offending field."""


def _require(condition, fieldname, message):
    if not condition:
        raise ConfigError("%s: %s" % (fieldname, message))


def _as_float(value, fieldname):
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError("%s: expected a number, got %r" % (fieldname, value))


def _as_mapping(value, fieldname):
    _require(isinstance(value, dict), fieldname, "expected a mapping")
    return value


def _flux_from_spec(spec, fieldname):
    _require(isinstance(spec, (list, tuple)) and len(spec) >= 3, fieldname,
             "expected a list of at least three [density, flux] pairs")
    try:
        points = np.asarray(spec, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError("%s: breakpoints must be numeric pairs" % fieldname)
    _require(points.ndim == 2 and points.shape[1] == 2, fieldname,
             "breakpoints must be [density, flux] pairs")
    try:
        return FluxFunction(points)
    except ValueError as exc:
        raise ConfigError("%s: %s" % (fieldname, exc))


def _entropy_from_spec(spec, flux, fieldname):
    spec = _as_mapping(spec, fieldname)
    kind = spec.get("kind")
    if kind == "quadratic":
        center = spec.get("center", 0.0)
        if center == "sigma":
            center = flux.sigma
        else:
            center = _as_float(center, fieldname + ".center")
        return quadratic_entropy((flux.a, flux.b), center=center)
    if kind == "neg_flux":
        return neg_flux_entropy(flux)
    if kind == "piecewise_linear_derivative":
        knots = spec.get("knots")
        _require(isinstance(knots, (list, tuple)) and len(knots) >= 2,
                 fieldname + ".knots", "expected at least two [density, slope] pairs")
        try:
            arr = np.asarray(knots, dtype=float)
        except (TypeError, ValueError):
            raise ConfigError("%s.knots: knots must be numeric pairs" % fieldname)
        _require(arr.ndim == 2 and arr.shape[1] == 2, fieldname + ".knots",
                 "knots must be [density, slope] pairs")
        try:
            return EntropyPair(arr[:, 0], arr[:, 1])
        except ValueError as exc:
            raise ConfigError("%s.knots: %s" % (fieldname, exc))
    raise ConfigError(
        "%s.kind: expected 'quadratic', 'neg_flux' or "
        "'piecewise_linear_derivative', got %r" % (fieldname, kind)
    )


def _road_specs(data, side, fieldname):
    specs = data.get(side)
    _require(isinstance(specs, (list, tuple)) and len(specs) >= 1, fieldname,
             "expected a nonempty list of road specifications")
    out = []
    for i, item in enumerate(specs):
        here = "%s[%d]" % (fieldname, i)
        item = _as_mapping(item, here)
        _require("id" in item, here + ".id", "road id is required")
        _require("flux" in item, here + ".flux", "flux breakpoints are required")
        _require("entropy" in item, here + ".entropy", "entropy spec is required")
        out.append(
            {
                "id": str(item["id"]),
                "flux": item["flux"],
                "entropy": item["entropy"],
            }
        )
    return out


@dataclass
class ScenarioConfig:
    """Validated scenario: road specs, initial data, solver and output."""

    incoming: list
    outgoing: list
    initial: dict
    solver: dict
    output_dir: str = "."
    priority: dict = field(default_factory=lambda: {"kind": "linear"})

    @classmethod
    def from_dict(cls, data):
        data = _as_mapping(data, "scenario")
        roads = _as_mapping(data.get("roads"), "roads")
        incoming = _road_specs(roads, "incoming", "roads.incoming")
        outgoing = _road_specs(roads, "outgoing", "roads.outgoing")
        ids = [r["id"] for r in incoming + outgoing]
        _require(len(set(ids)) == len(ids), "roads", "road ids must be unique")

        initial = data.get("initial", {})
        initial = _as_mapping(initial, "initial")
        for key in initial:
            _require(str(key) in ids, "initial.%s" % key, "unknown road id")
        initial = {str(k): v for k, v in initial.items()}

        solver = dict(_SOLVER_DEFAULTS)
        solver_in = _as_mapping(data.get("solver", {}), "solver")
        for key, value in solver_in.items():
            _require(key in _SOLVER_DEFAULTS, "solver.%s" % key, "unknown setting")
            solver[key] = value
        _require(solver["scheme"] in ("godunov", "bgk"), "solver.scheme",
                 "expected 'godunov' or 'bgk'")
        for key in ("dx", "dxi", "cfl", "epsilon", "truncation"):
            solver[key] = _as_float(solver[key], "solver.%s" % key)
            _require(solver[key] > 0, "solver.%s" % key, "must be positive")
        solver["t_end"] = _as_float(solver["t_end"], "solver.t_end")
        _require(solver["t_end"] >= 0, "solver.t_end", "must be nonnegative")
        _require(solver["cfl"] <= 1.0, "solver.cfl", "must not exceed 1")

        priority = _as_mapping(data.get("priority", {"kind": "linear"}), "priority")
        _require(priority.get("kind", "linear") == "linear", "priority.kind",
                 "only 'linear' is available")

        output = _as_mapping(data.get("output", {}), "output")
        output_dir = str(output.get("directory", "."))

        return cls(
            incoming=incoming,
            outgoing=outgoing,
            initial=initial,
            solver=solver,
            output_dir=output_dir,
            priority={"kind": "linear"},
        )

    @classmethod
    def load(cls, path):
        with open(path, "r") as handle:
            try:
                data = yaml.safe_load(handle)
            except yaml.YAMLError as exc:
                raise ConfigError("scenario: invalid YAML (%s)" % exc)
        return cls.from_dict(data)

    def junction(self):
        """Build the Junction described by the road specs."""
        priority = LinearPriority()
        built = {"in": [], "out": []}
        for side, specs in (("in", self.incoming), ("out", self.outgoing)):
            fieldname = "roads.incoming" if side == "in" else "roads.outgoing"
            for i, spec in enumerate(specs):
                here = "%s[%d]" % (fieldname, i)
                flux = _flux_from_spec(spec["flux"], here + ".flux")
                pair = _entropy_from_spec(spec["entropy"], flux, here + ".entropy")
                try:
                    built[side].append(Road(spec["id"], side, flux, pair, priority))
                except ValueError as exc:
                    raise ConfigError("%s: %s" % (here, exc))
        try:
            return Junction(built["in"], built["out"])
        except ValueError as exc:
            raise ConfigError("roads: %s" % exc)

    def _road_interval(self, direction):
        X = self.solver["truncation"]
        return (-X, 0.0) if direction == "in" else (0.0, X)

    def initial_functions(self, junction):
        """Per-road initial data as constants or piecewise constant callables.

        Each road needs either a number or a list of {from, to, value}
        segments covering its interval.
        """
        out = []
        for road in junction.roads:
            fieldname = "initial.%s" % road.road_id
            _require(road.road_id in self.initial, fieldname,
                     "initial data is required for every road")
            spec = self.initial[road.road_id]
            if isinstance(spec, (int, float)):
                out.append(float(spec))
                continue
            _require(isinstance(spec, (list, tuple)) and len(spec) >= 1, fieldname,
                     "expected a number or a list of segments")
            lo, hi = self._road_interval(road.direction)
            segs = []
            for i, seg in enumerate(spec):
                here = "%s[%d]" % (fieldname, i)
                seg = _as_mapping(seg, here)
                for key in ("from", "to", "value"):
                    _require(key in seg, here + "." + key, "segment key is required")
                segs.append(
                    (
                        _as_float(seg["from"], here + ".from"),
                        _as_float(seg["to"], here + ".to"),
                        _as_float(seg["value"], here + ".value"),
                    )
                )
            segs.sort(key=lambda s: s[0])
            tol = 1e-9 * max(1.0, hi - lo)
            _require(abs(segs[0][0] - lo) <= tol, fieldname,
                     "segments must start at %g" % lo)
            _require(abs(segs[-1][1] - hi) <= tol, fieldname,
                     "segments must end at %g" % hi)
            for (a0, b0, _), (a1, _, _) in zip(segs, segs[1:]):
                _require(b0 > a0, fieldname, "segments must have positive length")
                _require(abs(a1 - b0) <= tol, fieldname,
                         "segments must cover the interval without gaps")
            _require(segs[-1][1] > segs[-1][0], fieldname,
                     "segments must have positive length")

            def piecewise(x, segs=tuple(segs)):
                x = np.asarray(x, dtype=float)
                values = np.full(x.shape, segs[-1][2])
                for a0, b0, v in reversed(segs[:-1]):
                    values[x < b0] = v
                return values

            out.append(piecewise)
        return out

    def riemann_datum(self, junction):
        """Constant per-road states for the single Riemann problem."""
        datum = []
        for road in junction.roads:
            fieldname = "initial.%s" % road.road_id
            _require(road.road_id in self.initial, fieldname,
                     "initial data is required for every road")
            spec = self.initial[road.road_id]
            _require(isinstance(spec, (int, float)), fieldname,
                     "the Riemann solver needs constant initial data")
            datum.append(float(spec))
        return np.array(datum)

    def to_dict(self):
        return {
            "roads": {
                "incoming": [dict(r) for r in self.incoming],
                "outgoing": [dict(r) for r in self.outgoing],
            },
            "initial": dict(self.initial),
            "solver": dict(self.solver),
            "priority": dict(self.priority),
            "output": {"directory": self.output_dir},
        }
