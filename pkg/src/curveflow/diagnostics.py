"""Per-step diagnostic quantities and run-level summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .assembly import geometric_energy
from .config import FlowConfig
from .geometry import PolygonalCurve, build_frame, polygon_area, polygon_length
from .stepper import SavState, StepReport


@dataclass(frozen=True)
class GeometryBaseline:
    """Initial area and length used for relative error tracking."""

    area: float
    length: float

    @classmethod
    def from_curve(cls, curve: PolygonalCurve) -> "GeometryBaseline":
        return cls(area=polygon_area(curve), length=polygon_length(curve))


@dataclass(frozen=True)
class StepDiagnostics:
    """Diagnostics of one accepted step (or of the initial state)."""

    time: float
    q_mesh: float
    e_area: float
    e_length: float
    sav_energy_g: float
    sav_energy_m: float
    geom_energy: float
    gap_g: float
    iso_deficit: float
    newton_iterations: int
    min_edge: float
    multipliers: tuple


def step_diagnostics(curve: PolygonalCurve, sav: SavState, cfg: FlowConfig,
                     baseline: GeometryBaseline, time: float = 0.0,
                     report: StepReport | None = None) -> StepDiagnostics:
    """Edge ratio, relative constraint errors, SAV energies, gap, and deficit."""
    frame = build_frame(curve)
    lengths = frame.edge_lengths
    area = polygon_area(curve)
    length = polygon_length(curve)

    e_geom = geometric_energy(curve, frame, cfg)
    gap = abs(sav.r_g**2 - (e_geom + cfg.c_g))
    iso_deficit = length**2 / (4.0 * math.pi * area) - 1.0

    if report is None:
        iterations = 0
        multipliers = (0.0,) * cfg.n_constraints
    else:
        iterations = report.newton_iterations
        multipliers = tuple(float(x) for x in report.multipliers)

    return StepDiagnostics(
        time=time,
        q_mesh=float(lengths.max() / lengths.min()),
        e_area=abs(area - baseline.area) / abs(baseline.area),
        e_length=abs(length - baseline.length) / abs(baseline.length),
        sav_energy_g=sav.r_g**2,
        sav_energy_m=sav.r_m**2,
        geom_energy=e_geom,
        gap_g=gap,
        iso_deficit=iso_deficit,
        newton_iterations=iterations,
        min_edge=float(lengths.min()),
        multipliers=multipliers,
    )


def _nonincreasing(values, slack_scale: float = 1e-10) -> bool:
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return True
    slack = slack_scale * np.maximum(1.0, np.abs(values[:-1]))
    return bool(np.all(np.diff(values) <= slack))


def run_summary(history) -> dict:
    """Aggregate a run's diagnostics the way the experiment tables report them.

    Newton statistics average over the actual steps, so the t = 0 entry is
    excluded.
    """
    if not history:
        raise ValueError("run_summary needs a nonempty history")
    q = [d.q_mesh for d in history]
    steps = history[1:] if len(history) > 1 else history
    return {
        "n_steps": len(history) - 1,
        "final_time": history[-1].time,
        "max_q_mesh": max(q),
        "final_q_mesh": history[-1].q_mesh,
        "max_e_area": max(d.e_area for d in history),
        "max_e_length": max(d.e_length for d in history),
        "min_edge": min(d.min_edge for d in history),
        "avg_newton_iterations": float(np.mean([d.newton_iterations for d in steps])),
        "final_gap_g": history[-1].gap_g,
        "final_iso_deficit": history[-1].iso_deficit,
        "initial_geom_energy": history[0].geom_energy,
        "final_geom_energy": history[-1].geom_energy,
        "sav_g_monotone": _nonincreasing([d.sav_energy_g for d in history]),
        "sav_m_monotone": _nonincreasing([d.sav_energy_m for d in history]),
    }
