"""Render the three figure kinds from solver CSV outputs.

Figure kinds:
  evolution   curve overlays from snapshots.csv, final-time vertices dotted,
              one panel per input file, optional analytic circle overlay
  diagnostics SAV energy, geometric energy, constraint errors, mesh ratio,
              and Newton counts against time from one diagnostics.csv
  mesh_ratio  mesh-ratio histories of one or more runs on a log axis
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .schema import SchemaMismatch, read_diagnostics, read_snapshots  # noqa: E402

FIGURE_KINDS = ("evolution", "diagnostics", "mesh_ratio")


@dataclass
class PlotJob:
    """One figure: input CSV paths, figure kind, output image path."""

    inputs: list
    kind: str
    output: Path
    labels: list = field(default_factory=list)
    overlay_circle_radius: float | None = None

    def label(self, index: int) -> str:
        if index < len(self.labels):
            return self.labels[index]
        return Path(self.inputs[index]).parent.name or f"run {index + 1}"


def _close_loop(vertices: np.ndarray) -> np.ndarray:
    return np.vstack([vertices, vertices[:1]])


def _evolution_figure(job: PlotJob):
    fig, axes = plt.subplots(1, len(job.inputs),
                             figsize=(5.2 * len(job.inputs), 5.0), squeeze=False)
    for index, path in enumerate(job.inputs):
        ax = axes[0, index]
        snapshots = read_snapshots(path)
        colors = plt.cm.viridis(np.linspace(0.15, 0.85, len(snapshots)))
        for (t, vertices), color in zip(snapshots, colors):
            loop = _close_loop(vertices)
            ax.plot(loop[:, 0], loop[:, 1], "-", color=color, lw=1.2,
                    label=f"t = {t:g}")
        final_time, final_vertices = snapshots[-1]
        ax.plot(final_vertices[:, 0], final_vertices[:, 1], ".", color="black",
                ms=3.5, label=f"vertices, t = {final_time:g}", gid="final-vertices")
        if job.overlay_circle_radius is not None:
            theta = np.linspace(0, 2 * np.pi, 720)
            radius = job.overlay_circle_radius
            ax.plot(radius * np.cos(theta), radius * np.sin(theta), "--",
                    color="crimson", lw=1.0, label=f"circle r = {radius:.4g}")
        ax.set_aspect("equal")
        ax.set_title(job.label(index))
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        ax.legend(fontsize=8, loc="upper right")
    fig.tight_layout()
    return fig


def _diagnostics_figure(job: PlotJob):
    data = read_diagnostics(job.inputs[0])
    t = data["time"]
    fig, axes = plt.subplots(3, 2, figsize=(10, 9), sharex=True)

    ax = axes[0, 0]
    ax.plot(t, data["r_g_sq"], label="modified SAV energy")
    ax.plot(t, data["E_geom"], "--", label="geometric energy")
    ax.set_ylabel("energy")
    ax.legend(fontsize=8)

    ax = axes[0, 1]
    ax.semilogy(t, np.maximum(data["gap_g"], 1e-300), label="SAV gap")
    ax.set_ylabel("gap")
    ax.legend(fontsize=8)

    ax = axes[1, 0]
    ax.semilogy(t, np.maximum(data["e_A"], 1e-300), label="relative area error")
    ax.semilogy(t, np.maximum(data["e_L"], 1e-300), label="relative length error")
    ax.set_ylabel("constraint error")
    ax.legend(fontsize=8)

    ax = axes[1, 1]
    ax.semilogy(t, data["Q_mesh"], label="mesh ratio")
    ax.set_ylabel("mesh ratio")
    ax.legend(fontsize=8)

    ax = axes[2, 0]
    ax.plot(t, data["newton_iters"], drawstyle="steps-mid", label="Newton iterations")
    ax.set_ylabel("iterations")
    ax.set_xlabel("time")
    ax.legend(fontsize=8)

    ax = axes[2, 1]
    ax.plot(t, data["r_m_sq"], label="mesh SAV energy")
    ax.set_ylabel("energy")
    ax.set_xlabel("time")
    ax.legend(fontsize=8)

    fig.tight_layout()
    return fig


def _mesh_ratio_figure(job: PlotJob):
    fig, ax = plt.subplots(figsize=(6.4, 4.6))
    for index, path in enumerate(job.inputs):
        data = read_diagnostics(path)
        ax.semilogy(data["time"], data["Q_mesh"], label=job.label(index))
    ax.set_xlabel("time")
    ax.set_ylabel("mesh ratio")
    ax.legend(fontsize=9)
    fig.tight_layout()
    return fig


def build_figure(job: PlotJob):
    """Build the matplotlib figure for a job without writing it."""
    if job.kind not in FIGURE_KINDS:
        raise SchemaMismatch(f"unknown figure kind {job.kind!r}")
    if not job.inputs:
        raise SchemaMismatch("no input files")
    if job.kind == "evolution":
        return _evolution_figure(job)
    if job.kind == "diagnostics":
        return _diagnostics_figure(job)
    return _mesh_ratio_figure(job)


def render(job: PlotJob) -> Path:
    """Render a job to its output image path and return the path."""
    fig = build_figure(job)
    output = Path(job.output)
    output.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(output, dpi=150)
    plt.close(fig)
    return output


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="curveflow-plot",
        description="Render evolution, diagnostics, or mesh-ratio figures "
                    "from curveflow CSV outputs.")
    parser.add_argument("inputs", nargs="+", help="input CSV paths")
    parser.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--label", action="append", default=[],
                        help="panel/series label (repeatable)")
    parser.add_argument("--overlay-circle", type=float, default=None,
                        help="overlay an analytic circle of this radius "
                             "(evolution only)")
    args = parser.parse_args(argv)
    job = PlotJob(inputs=args.inputs, kind=args.kind, output=Path(args.out),
                  labels=args.label, overlay_circle_radius=args.overlay_circle)
    try:
        render(job)
    except (SchemaMismatch, OSError) as exc:
        print(f"error: {exc}")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
