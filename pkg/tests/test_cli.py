import json
import subprocess
import sys

import numpy as np
import pytest

from curveflow.cli import (RunSpec, execute_run, load_run_spec,
                           measure_convergence, run_compare, run_sweep)
from curveflow.errors import InvalidRunSpec, MismatchedSweep
from curveflow.flows import preset


def tiny_csf_config(tmp_path, **extra):
    doc = {
        "preset": "csf",
        "overrides": {"n_vertices": 32, "final_time": 0.01, "dt": 1e-3},
        "snapshot_times": [0.0, 0.01],
    }
    doc.update(extra)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return path


class TestRunSpec:
    def test_load_and_defaults(self, tmp_path):
        spec = load_run_spec(tiny_csf_config(tmp_path), tmp_path / "out")
        assert spec.preset_name == "csf"
        assert spec.snapshot_times == [0.0, 0.01]
        assert set(spec.emit) == {"diagnostics", "snapshots", "summary"}

    def test_unknown_keys_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"preset": "csf", "plot": True}))
        with pytest.raises(InvalidRunSpec):
            load_run_spec(path)

    def test_dt_must_divide_final_time(self, tmp_path):
        spec = RunSpec(preset_name="csf",
                       overrides={"n_vertices": 16, "final_time": 0.0105, "dt": 1e-3},
                       out_dir=tmp_path)
        with pytest.raises(InvalidRunSpec):
            execute_run(spec)

    def test_snapshot_time_outside_range(self, tmp_path):
        spec = RunSpec(preset_name="csf",
                       overrides={"n_vertices": 16, "final_time": 0.01, "dt": 1e-3},
                       out_dir=tmp_path, snapshot_times=[0.5])
        with pytest.raises(InvalidRunSpec):
            execute_run(spec)


class TestOutputs:
    def test_files_written(self, tmp_path):
        spec = load_run_spec(tiny_csf_config(tmp_path), tmp_path / "out")
        summary = execute_run(spec)
        assert (tmp_path / "out" / "diagnostics.csv").exists()
        assert (tmp_path / "out" / "snapshots.csv").exists()
        assert (tmp_path / "out" / "summary.json").exists()
        assert summary["n_steps"] == 10
        assert "exact_radius_error" in summary

    def test_diagnostics_columns_and_rows(self, tmp_path):
        spec = RunSpec(preset_name="apcsf",
                       overrides={"n_vertices": 24, "final_time": 0.005, "dt": 5e-4},
                       out_dir=tmp_path / "out")
        execute_run(spec)
        lines = (tmp_path / "out" / "diagnostics.csv").read_text().splitlines()
        header = lines[0].split(",")
        assert header == ["step", "time", "Q_mesh", "e_A", "e_L", "r_g_sq",
                          "r_m_sq", "E_geom", "gap_g", "iso_deficit",
                          "newton_iters", "min_edge", "lambda_1"]
        assert len(lines) == 1 + 11  # header + t=0 row + 10 steps

    def test_snapshot_rows(self, tmp_path):
        spec = load_run_spec(tiny_csf_config(tmp_path), tmp_path / "out")
        execute_run(spec)
        lines = (tmp_path / "out" / "snapshots.csv").read_text().splitlines()
        assert lines[0] == "time,vertex,x,y"
        assert len(lines) == 1 + 2 * 32  # two snapshots of 32 vertices

    def test_csv_outputs_are_deterministic(self, tmp_path):
        spec_a = load_run_spec(tiny_csf_config(tmp_path), tmp_path / "a")
        spec_b = load_run_spec(tiny_csf_config(tmp_path), tmp_path / "b")
        execute_run(spec_a)
        execute_run(spec_b)
        for name in ("diagnostics.csv", "snapshots.csv"):
            assert (tmp_path / "a" / name).read_bytes() \
                == (tmp_path / "b" / name).read_bytes()

    def test_summary_echoes_every_config_parameter(self, tmp_path):
        spec = load_run_spec(tiny_csf_config(tmp_path), tmp_path / "out")
        execute_run(spec)
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        echoed = summary["config"]
        flow = preset("csf", {"n_vertices": 32, "final_time": 0.01, "dt": 1e-3})
        assert echoed == json.loads(json.dumps(flow.to_dict()))
        assert echoed["config"]["dt"] == 1e-3
        assert echoed["n_vertices"] == 32


class TestConvergenceMeasure:
    def test_linear_errors_give_eoc_one(self):
        pairs = [(1e-3, 1e-3), (5e-4, 5e-4), (2.5e-4, 2.5e-4)]
        np.testing.assert_allclose(measure_convergence(pairs), 1.0, atol=1e-12)

    def test_quadratic_errors_give_eoc_two(self):
        pairs = [(1e-3, 1e-6), (5e-4, 2.5e-7), (2.5e-4, 6.25e-8)]
        np.testing.assert_allclose(measure_convergence(pairs), 2.0, atol=1e-12)

    def test_published_error_column(self):
        errors = [4.432782e-4, 2.219714e-4, 1.110690e-4, 5.555537e-5]
        dts = [1e-3, 5e-4, 2.5e-4, 1.25e-4]
        eocs = measure_convergence(list(zip(dts, errors)))
        np.testing.assert_allclose(eocs, [0.9978, 0.9989, 0.9995], atol=5e-5)

    def test_non_halving_rejected(self):
        with pytest.raises(MismatchedSweep):
            measure_convergence([(1e-3, 1.0), (4e-4, 0.5)])


class TestSweepAndCompare:
    def test_sweep_writes_eoc(self, tmp_path):
        spec = RunSpec(preset_name="csf",
                       overrides={"n_vertices": 32, "final_time": 0.01},
                       out_dir=tmp_path / "sweep")
        sweep = run_sweep(spec, [1e-3, 5e-4])
        assert len(sweep["entries"]) == 2
        assert len(sweep["eoc"]) == 1
        assert (tmp_path / "sweep" / "dt_1.000000e-03" / "diagnostics.csv").exists()
        assert (tmp_path / "sweep" / "sweep_summary.json").exists()

    def test_compare_pairs_weights(self, tmp_path):
        spec = RunSpec(preset_name="apcsf",
                       overrides={"n_vertices": 24, "final_time": 0.005},
                       out_dir=tmp_path / "cmp")
        compare = run_compare(spec, ["lagrangian", "uniform"])
        weights = [e["mesh_weight"] for e in compare["entries"]]
        assert weights == ["lagrangian", "uniform"]
        assert (tmp_path / "cmp" / "weight_uniform" / "summary.json").exists()


class TestMainEntry:
    def run_cli(self, *args):
        return subprocess.run([sys.executable, "-m", "curveflow.cli", *args],
                              capture_output=True, text=True)

    def test_run_command(self, tmp_path):
        config = tiny_csf_config(tmp_path)
        proc = self.run_cli("run", "--config", str(config), "--out",
                            str(tmp_path / "out"))
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "out" / "summary.json").exists()

    def test_error_record_on_bad_preset(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"preset": "nonsense"}))
        proc = self.run_cli("run", "--config", str(path), "--out",
                            str(tmp_path / "out"))
        assert proc.returncode == 1
        record = json.loads(proc.stderr.strip().splitlines()[-1])
        assert record["error"] == "InvalidOverride"
        assert (tmp_path / "out" / "error.json").exists()

    def test_sweep_command(self, tmp_path):
        config = tiny_csf_config(tmp_path, snapshot_times=[])
        proc = self.run_cli("sweep", "--config", str(config), "--out",
                            str(tmp_path / "sweep"), "--dt", "1e-3,5e-4")
        assert proc.returncode == 0, proc.stderr
        sweep = json.loads((tmp_path / "sweep" / "sweep_summary.json").read_text())
        assert len(sweep["eoc"]) == 1
