"""Experiment presets: initial curves and bound flow configurations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import FlowConfig
from .errors import InvalidOverride, UnknownCurveKind
from .geometry import PolygonalCurve

PRESET_NAMES = ("csf", "apcsf", "cdf", "helfrich")

CURVE_KINDS = ("circle", "star", "perturbed_circle", "ellipse")

_CURVE_DEFAULTS = {
    "circle": {"radius": 1.0},
    "star": {"amplitude": 0.9, "frequency": 5},
    "perturbed_circle": {"cos_amplitude": 0.2, "cos_mode": 3,
                         "sin_amplitude": 0.1, "sin_mode": 5},
    "ellipse": {"a": 4.0, "b": 1.0},
}


def _evaluate_curve(kind: str, params: dict, theta: np.ndarray) -> np.ndarray:
    if kind == "circle":
        radius = params["radius"]
        return radius * np.column_stack([np.cos(theta), np.sin(theta)])
    if kind == "star":
        radius = 1.0 + params["amplitude"] * np.cos(params["frequency"] * theta)
        return radius[:, None] * np.column_stack([np.cos(theta), np.sin(theta)])
    if kind == "perturbed_circle":
        radius = (1.0 + params["cos_amplitude"] * np.cos(params["cos_mode"] * theta)
                  + params["sin_amplitude"] * np.sin(params["sin_mode"] * theta))
        return radius[:, None] * np.column_stack([np.cos(theta), np.sin(theta)])
    if kind == "ellipse":
        return np.column_stack([params["a"] * np.cos(theta), params["b"] * np.sin(theta)])
    raise UnknownCurveKind(f"unknown initial curve kind {kind!r}")


def equalize_edge_lengths(points: np.ndarray, n_vertices: int, tol: float = 1e-10,
                          max_iterations: int = 500) -> np.ndarray:
    """Pick n vertices on a fine closed polyline so all chords are equal.

    Iterated piecewise-linear arclength inversion: redistribute the vertices
    along the fixed fine polyline by their cumulative chord lengths until the
    relative edge-length spread falls below `tol`.  Vertex 0 stays pinned at
    the start of the polyline.
    """
    pts = np.asarray(points, dtype=float)
    closed = np.vstack([pts, pts[:1]])
    seg = np.diff(closed, axis=0)
    seg_len = np.linalg.norm(seg, axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg_len)])
    total_arc = arc[-1]

    def place(s):
        idx = np.clip(np.searchsorted(arc, s, side="right") - 1, 0, len(seg_len) - 1)
        frac = (s - arc[idx]) / seg_len[idx]
        return closed[idx] + frac[:, None] * seg[idx]

    s = np.arange(n_vertices) * (total_arc / n_vertices)
    for _ in range(max_iterations):
        verts = place(s)
        chords = np.linalg.norm(np.roll(verts, -1, axis=0) - verts, axis=1)
        mean = chords.mean()
        if (chords.max() - chords.min()) / mean <= tol:
            return verts
        cumulative = np.concatenate([[0.0], np.cumsum(chords)])
        nodes = np.concatenate([s, [total_arc]])
        targets = np.arange(n_vertices) * (cumulative[-1] / n_vertices)
        s = np.interp(targets, cumulative, nodes)
    raise RuntimeError("edge equalization did not converge")


def make_initial_curve(kind: str, n_vertices: int, params: dict | None = None,
                       uniform_edges: bool = False) -> PolygonalCurve:
    """Sample a named parametric curve at theta_j = 2 pi j / N.

    With `uniform_edges`, the vertices are instead redistributed along a fine
    sampling of the curve until all polygon edges are equal (used for the
    curve diffusion initial data).
    """
    if kind not in _CURVE_DEFAULTS:
        raise UnknownCurveKind(f"unknown initial curve kind {kind!r}")
    if n_vertices < 3:
        raise ValueError("n_vertices must be at least 3")
    merged = dict(_CURVE_DEFAULTS[kind])
    merged.update(params or {})

    if uniform_edges:
        fine = max(20000, 200 * n_vertices)
        theta = 2.0 * np.pi * np.arange(fine) / fine
        vertices = equalize_edge_lengths(_evaluate_curve(kind, merged, theta), n_vertices)
    else:
        theta = 2.0 * np.pi * np.arange(n_vertices) / n_vertices
        vertices = _evaluate_curve(kind, merged, theta)
    return PolygonalCurve.from_vertices(vertices)


def exact_circle_radius(t: float) -> float:
    """Radius of the shrinking circle under curve shortening, R(t) = sqrt(1 - 2t)."""
    return math.sqrt(1.0 - 2.0 * t)


@dataclass(frozen=True)
class FlowPreset:
    """A named experiment: flow configuration plus initial-curve factory."""

    name: str
    config: FlowConfig
    n_vertices: int
    final_time: float
    curve_kind: str
    curve_params: dict = field(default_factory=dict)
    uniform_edges: bool = False
    exact_solution: str | None = None

    def initial_curve(self) -> PolygonalCurve:
        return make_initial_curve(self.curve_kind, self.n_vertices, self.curve_params,
                                  self.uniform_edges)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n_vertices": self.n_vertices,
            "final_time": self.final_time,
            "curve_kind": self.curve_kind,
            "curve_params": dict(self.curve_params),
            "uniform_edges": self.uniform_edges,
            "exact_solution": self.exact_solution,
            "config": self.config.to_dict(),
        }


def preset_from_dict(data: dict) -> FlowPreset:
    data = dict(data)
    config = FlowConfig.from_dict(data.pop("config"))
    return FlowPreset(config=config, **data)


_PRESETS = {
    "csf": dict(
        n_vertices=512, final_time=0.25,
        curve_kind="circle", curve_params={"radius": 1.0},
        uniform_edges=False, exact_solution="shrinking_circle",
        config=dict(dt=1e-3, energy="length", normal_metric="l2",
                    normal_stabilizer="laplacian", beta_nu2=10.0, beta_nu4=0.0,
                    beta_tau=100.0, mesh_weight="uniform", constraints=(),
                    c_g=1.0, c_m=1.0, newton_tol=1e-12, newton_max_iter=20),
    ),
    "apcsf": dict(
        n_vertices=256, final_time=0.5,
        curve_kind="star", curve_params={"amplitude": 0.9, "frequency": 5},
        uniform_edges=False, exact_solution=None,
        config=dict(dt=5e-4, energy="length", normal_metric="l2",
                    normal_stabilizer="laplacian", beta_nu2=10.0, beta_nu4=0.0,
                    beta_tau=100.0, mesh_weight="uniform", constraints=("area",),
                    c_g=1.0, c_m=1.0, newton_tol=1e-12, newton_max_iter=20),
    ),
    "cdf": dict(
        n_vertices=256, final_time=0.1,
        curve_kind="perturbed_circle",
        curve_params={"cos_amplitude": 0.2, "cos_mode": 3,
                      "sin_amplitude": 0.1, "sin_mode": 5},
        uniform_edges=True, exact_solution=None,
        config=dict(dt=1e-5, energy="length", normal_metric="hminus1",
                    normal_stabilizer="hybrid", beta_nu2=10.0, beta_nu4=10.0,
                    beta_tau=10.0, mesh_weight="uniform", constraints=(),
                    c_g=1.0, c_m=1.0, newton_tol=1e-12, newton_max_iter=20),
    ),
    "helfrich": dict(
        n_vertices=256, final_time=0.5,
        curve_kind="ellipse", curve_params={"a": 4.0, "b": 1.0},
        uniform_edges=False, exact_solution=None,
        config=dict(dt=1e-4, energy="helfrich", c0=0.5, normal_metric="l2",
                    normal_stabilizer="biharmonic", beta_nu2=0.0, beta_nu4=10.0,
                    beta_tau=10.0, mesh_weight="uniform",
                    constraints=("area", "length"),
                    c_g=1.0, c_m=1.0, newton_tol=1e-10, newton_max_iter=20),
    ),
}

# Override keys that live on the preset rather than on the flow config.
_PRESET_LEVEL_KEYS = ("n_vertices", "final_time", "curve_kind", "curve_params",
                      "uniform_edges")


def preset(name: str, overrides: dict | None = None) -> FlowPreset:
    """Build a named preset, optionally overriding preset or config fields.

    Rejects unknown keys and inconsistent configurations (for example the
    hminus1 metric combined with an area constraint) with InvalidOverride.
    """
    if name not in _PRESETS:
        raise InvalidOverride(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    spec = {k: (dict(v) if isinstance(v, dict) else v) for k, v in _PRESETS[name].items()}
    config_spec = spec.pop("config")

    for key, value in (overrides or {}).items():
        if key in _PRESET_LEVEL_KEYS:
            spec[key] = value
        elif key in config_spec or key in ("c0", "warm_start"):
            config_spec[key] = value
        else:
            raise InvalidOverride(f"unknown override {key!r}")

    config = FlowConfig.from_dict(config_spec)
    return FlowPreset(name=name, config=config, **spec)
