"""Batch front end: JSON-configured runs, time-step sweeps, weight comparisons.

Outputs are deterministic: CSV files carry full double precision (17
significant digits), '.' decimals, and LF line endings, so identical run
specifications produce byte-identical CSV files.  summary.json additionally
carries wall-clock timings, which naturally vary between runs.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .diagnostics import GeometryBaseline, run_summary, step_diagnostics
from .errors import CurveFlowError, InvalidRunSpec, MismatchedSweep
from .flows import FlowPreset, exact_circle_radius, preset
from .stepper import advance, constraint_baseline, initial_sav_state

_GRID_TOL = 1e-12
EMIT_KINDS = ("diagnostics", "snapshots", "summary")


@dataclass
class RunSpec:
    """One batch job: a preset plus overrides, outputs, and snapshot times."""

    preset_name: str
    overrides: dict = field(default_factory=dict)
    out_dir: Path = Path(".")
    snapshot_times: list = field(default_factory=list)
    emit: tuple = EMIT_KINDS
    label: str | None = None

    def build_preset(self) -> FlowPreset:
        return preset(self.preset_name, self.overrides)


def load_run_spec(config_path, out_dir=None) -> RunSpec:
    """Read a run specification from a single JSON document."""
    with open(config_path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    known = {"preset", "overrides", "snapshot_times", "emit", "out_dir", "label"}
    unknown = set(doc) - known
    if unknown:
        raise InvalidRunSpec(f"unknown config keys: {sorted(unknown)}")
    if "preset" not in doc:
        raise InvalidRunSpec("config must name a preset")
    emit = tuple(doc.get("emit", EMIT_KINDS))
    for kind in emit:
        if kind not in EMIT_KINDS:
            raise InvalidRunSpec(f"unknown emit kind {kind!r}")
    resolved_out = Path(out_dir) if out_dir is not None else Path(doc.get("out_dir", "."))
    return RunSpec(
        preset_name=doc["preset"],
        overrides=doc.get("overrides", {}),
        out_dir=resolved_out,
        snapshot_times=list(doc.get("snapshot_times", [])),
        emit=emit,
        label=doc.get("label"),
    )


def _step_count(final_time: float, dt: float) -> int:
    steps = round(final_time / dt)
    if steps < 1 or abs(steps * dt - final_time) > _GRID_TOL * max(1.0, final_time):
        raise InvalidRunSpec(
            f"dt={dt!r} does not divide the final time {final_time!r} evenly; "
            "a trailing partial step is not taken")
    return steps


def _snapshot_steps(snapshot_times, final_time: float, dt: float, n_steps: int) -> dict:
    """Map step index -> snapshot time, snapping each time to its nearest step."""
    mapping: dict[int, float] = {}
    for t in snapshot_times:
        if t < -_GRID_TOL or t > final_time + _GRID_TOL:
            raise InvalidRunSpec(f"snapshot time {t!r} outside [0, {final_time}]")
        idx = min(max(round(t / dt), 0), n_steps)
        mapping.setdefault(idx, float(t))
    return mapping


@dataclass
class RunResult:
    """Everything produced by one time loop."""

    preset: FlowPreset
    history: list
    reports: list
    snapshots: list
    wall_times: list
    final_curve: object
    summary: dict


def run_flow(flow: FlowPreset, snapshot_times=()) -> RunResult:
    """Execute the full time loop of one preset and collect diagnostics.

    BLAS threading is pinned to one thread: at the dense problem sizes used
    here (N <= 1024) the threaded factorizations are slower than serial ones,
    and serial execution keeps runs bitwise reproducible.  Job-level
    parallelism across sweep and compare entries is governed by the
    CURVEFLOW_THREADS environment variable instead.
    """
    with threadpool_limits(limits=1):
        return _run_flow(flow, snapshot_times)


def _run_flow(flow: FlowPreset, snapshot_times=()) -> RunResult:
    cfg = flow.config
    n_steps = _step_count(flow.final_time, cfg.dt)
    snap_at = _snapshot_steps(snapshot_times, flow.final_time, cfg.dt, n_steps)

    curve = flow.initial_curve()
    sav = initial_sav_state(curve, cfg)
    baseline = constraint_baseline(curve, cfg)
    geometry0 = GeometryBaseline.from_curve(curve)

    history = [step_diagnostics(curve, sav, cfg, geometry0, 0.0, None)]
    snapshots = [(0.0, curve.vertices)] if 0 in snap_at else []
    reports = []
    wall_times = []
    lambdas = None

    for n in range(1, n_steps + 1):
        started = _time.perf_counter()
        curve, sav, report = advance(curve, sav, cfg, baseline, lambdas)
        wall_times.append(_time.perf_counter() - started)
        lambdas = report.multipliers
        reports.append(report)
        history.append(step_diagnostics(curve, sav, cfg, geometry0, n * cfg.dt, report))
        if n in snap_at:
            snapshots.append((n * cfg.dt, curve.vertices))

    summary = run_summary(history)
    summary["preset"] = flow.name
    summary["config"] = flow.to_dict()
    summary["response_solves_per_step"] = reports[0].response_solves if reports else 0
    summary["min_mesh_denominator"] = min((r.mesh_denominator for r in reports),
                                          default=1.0)
    summary["max_final_residual_norm"] = max((r.final_residual_norm for r in reports),
                                             default=0.0)
    # The first step is the warm-up and stays out of the per-step average.
    timed = wall_times[1:] if len(wall_times) > 1 else wall_times
    summary["wall_clock_per_step"] = float(np.mean(timed)) if timed else 0.0
    summary["wall_clock_total"] = float(np.sum(wall_times))

    if flow.exact_solution == "shrinking_circle":
        radius = exact_circle_radius(flow.final_time)
        radii = np.linalg.norm(curve.vertices, axis=1)
        summary["exact_radius_error"] = float(np.max(np.abs(radii - radius)))

    return RunResult(preset=flow, history=history, reports=reports,
                     snapshots=snapshots, wall_times=wall_times,
                     final_curve=curve, summary=summary)


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_diagnostics_csv(path, history, n_constraints: int):
    columns = ["step", "time", "Q_mesh", "e_A", "e_L", "r_g_sq", "r_m_sq",
               "E_geom", "gap_g", "iso_deficit", "newton_iters", "min_edge"]
    columns += [f"lambda_{i + 1}" for i in range(n_constraints)]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for step, d in enumerate(history):
            row = [step, d.time, d.q_mesh, d.e_area, d.e_length, d.sav_energy_g,
                   d.sav_energy_m, d.geom_energy, d.gap_g, d.iso_deficit,
                   d.newton_iterations, d.min_edge, *d.multipliers]
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def write_snapshots_csv(path, snapshots):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("time,vertex,x,y\n")
        for t, vertices in snapshots:
            for j, (x, y) in enumerate(vertices):
                fh.write(f"{_fmt(t)},{j},{_fmt(x)},{_fmt(y)}\n")


def _json_default(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.ndarray, tuple)):
        return list(value)
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"not JSON serializable: {type(value)}")


def write_summary_json(path, summary: dict):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def execute_run(spec: RunSpec) -> dict:
    """Run one job and write the requested output files."""
    flow = spec.build_preset()
    result = run_flow(flow, spec.snapshot_times)
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if "diagnostics" in spec.emit:
        write_diagnostics_csv(out / "diagnostics.csv", result.history,
                              flow.config.n_constraints)
    if "snapshots" in spec.emit:
        write_snapshots_csv(out / "snapshots.csv", result.snapshots)
    if "summary" in spec.emit:
        summary = dict(result.summary)
        if spec.label is not None:
            summary["label"] = spec.label
        write_summary_json(out / "summary.json", summary)
    return result.summary


def measure_convergence(errors) -> list:
    """EOC values log(e_k / e_{k+1}) / log 2 for a successively halving dt list."""
    pairs = list(errors)
    if len(pairs) < 2:
        raise MismatchedSweep("convergence needs at least two (dt, error) pairs")
    eocs = []
    for (dt_coarse, e_coarse), (dt_fine, e_fine) in zip(pairs, pairs[1:]):
        if abs(dt_fine - 0.5 * dt_coarse) > 1e-9 * dt_coarse:
            raise MismatchedSweep(
                f"dt values must halve successively, got {dt_coarse} -> {dt_fine}")
        eocs.append(math.log(e_coarse / e_fine) / math.log(2.0))
    return eocs


def _dt_label(dt: float) -> str:
    return f"dt_{dt:.6e}"


def _run_sweep_entry(args):
    spec_dict, dt = args
    spec = RunSpec(**spec_dict)
    spec.overrides = dict(spec.overrides, dt=dt)
    spec.out_dir = Path(spec.out_dir) / _dt_label(dt)
    return dt, execute_run(spec)


def _worker_count() -> int:
    return max(1, int(os.environ.get("CURVEFLOW_THREADS", "1")))


def _spec_as_dict(spec: RunSpec) -> dict:
    return {
        "preset_name": spec.preset_name,
        "overrides": dict(spec.overrides),
        "out_dir": Path(spec.out_dir),
        "snapshot_times": list(spec.snapshot_times),
        "emit": tuple(spec.emit),
        "label": spec.label,
    }


def _map_jobs(fn, jobs):
    workers = _worker_count()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(job) for job in jobs]


def run_sweep(spec: RunSpec, dts) -> dict:
    """Run the preset once per time step size and tabulate errors and EOCs."""
    dts = [float(dt) for dt in dts]
    if not dts:
        raise InvalidRunSpec("sweep needs at least one dt")
    results = _map_jobs(_run_sweep_entry, [(_spec_as_dict(spec), dt) for dt in dts])

    entries = [{"dt": dt, "summary": summary} for dt, summary in results]
    sweep = {"preset": spec.preset_name, "entries": entries}
    if all("exact_radius_error" in e["summary"] for e in entries):
        pairs = [(e["dt"], e["summary"]["exact_radius_error"]) for e in entries]
        sweep["errors"] = [{"dt": dt, "error": err} for dt, err in pairs]
        sweep["eoc"] = measure_convergence(pairs)
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_summary_json(out / "sweep_summary.json", sweep)
    return sweep


def _run_compare_entry(args):
    spec_dict, weight = args
    spec = RunSpec(**spec_dict)
    spec.overrides = dict(spec.overrides, mesh_weight=weight)
    spec.out_dir = Path(spec.out_dir) / f"weight_{weight}"
    spec.label = weight
    return weight, execute_run(spec)


def run_compare(spec: RunSpec, weights) -> dict:
    """Run the preset once per mesh-weight strategy and pair the summaries."""
    weights = list(weights)
    if not weights:
        raise InvalidRunSpec("compare needs at least one mesh weight")
    results = _map_jobs(_run_compare_entry,
                        [(_spec_as_dict(spec), w) for w in weights])
    compare = {"preset": spec.preset_name,
               "entries": [{"mesh_weight": w, "summary": s} for w, s in results]}
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_summary_json(out / "compare_summary.json", compare)
    return compare


def _error_record(exc: Exception) -> dict:
    return {"error": type(exc).__name__, "message": str(exc)}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curveflow",
        description="Evolve closed planar curves under constrained geometric flows.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one configured run")
    run_p.add_argument("--config", required=True, help="path to the JSON run config")
    run_p.add_argument("--out", default=None, help="output directory")

    sweep_p = sub.add_parser("sweep", help="run a time-step sweep")
    sweep_p.add_argument("--config", required=True)
    sweep_p.add_argument("--out", default=None)
    sweep_p.add_argument("--dt", required=True,
                         help="comma-separated list of time step sizes")

    cmp_p = sub.add_parser("compare", help="compare mesh-weight strategies")
    cmp_p.add_argument("--config", required=True)
    cmp_p.add_argument("--out", default=None)
    cmp_p.add_argument("--weights", required=True,
                       help="comma-separated list of mesh weights")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    spec = None
    try:
        spec = load_run_spec(args.config, args.out)
        if args.command == "run":
            execute_run(spec)
        elif args.command == "sweep":
            run_sweep(spec, [float(x) for x in args.dt.split(",")])
        else:
            run_compare(spec, [w.strip() for w in args.weights.split(",")])
        return 0
    except (CurveFlowError, OSError, ValueError, json.JSONDecodeError) as exc:
        record = _error_record(exc)
        print(json.dumps(record), file=sys.stderr)
        if spec is not None:
            try:
                out = Path(spec.out_dir)
                out.mkdir(parents=True, exist_ok=True)
                write_summary_json(out / "error.json", record)
            except OSError:
                pass
        return 1


if __name__ == "__main__":
    sys.exit(main())
