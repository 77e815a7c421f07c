import math
from pathlib import Path

import numpy as np
import pytest

from curveflow_plots import (PlotJob, SchemaMismatch, build_figure, read_diagnostics,
                             read_snapshots, render)
from curveflow_plots.render import main

DATA = Path(__file__).parent / "data"


class TestSchema:
    def test_read_diagnostics_columns(self):
        data = read_diagnostics(DATA / "csf_diagnostics.csv")
        assert data["time"][0] == 0.0
        assert data["time"][-1] == pytest.approx(0.25)
        assert "lambda_1" in read_diagnostics(DATA / "helfrich_diagnostics.csv")

    def test_read_snapshots_blocks(self):
        snapshots = read_snapshots(DATA / "csf_snapshots.csv")
        np.testing.assert_allclose([t for t, _ in snapshots],
                                   [0.0, 0.1, 0.175, 0.25], atol=1e-12)
        assert all(v.shape == (128, 2) for _, v in snapshots)

    def test_missing_column_named(self, tmp_path):
        path = tmp_path / "broken.csv"
        path.write_text("step,time,Q_mesh\n0,0.0,1.0\n")
        with pytest.raises(SchemaMismatch, match="e_A"):
            read_diagnostics(path)

    def test_empty_snapshot_list_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("time,vertex,x,y\n")
        with pytest.raises(SchemaMismatch):
            read_snapshots(path)

    def test_wrong_snapshot_header_names_offender(self, tmp_path):
        path = tmp_path / "odd.csv"
        path.write_text("time,node,x,y\n0.0,0,1.0,0.0\n")
        with pytest.raises(SchemaMismatch, match="vertex"):
            read_snapshots(path)


class TestRenderKinds:
    def test_evolution_figure(self, tmp_path):
        out = render(PlotJob(inputs=[DATA / "csf_snapshots.csv"], kind="evolution",
                             output=tmp_path / "evolution.png"))
        assert out.exists() and out.stat().st_size > 0

    def test_two_panel_evolution_comparison(self, tmp_path):
        job = PlotJob(inputs=[DATA / "apcsf_lagrangian_snapshots.csv",
                              DATA / "apcsf_uniform_snapshots.csv"],
                      kind="evolution", output=tmp_path / "compare.png",
                      labels=["lagrangian reference", "uniform redistribution"])
        fig = build_figure(job)
        assert len(fig.axes) == 2
        render(job)
        assert (tmp_path / "compare.png").exists()

    def test_diagnostics_figure(self, tmp_path):
        out = render(PlotJob(inputs=[DATA / "helfrich_diagnostics.csv"],
                             kind="diagnostics", output=tmp_path / "diag.png"))
        assert out.exists() and out.stat().st_size > 0

    def test_mesh_ratio_figure(self, tmp_path):
        out = render(PlotJob(inputs=[DATA / "apcsf_lagrangian_diagnostics.csv",
                                     DATA / "apcsf_uniform_diagnostics.csv"],
                             kind="mesh_ratio", output=tmp_path / "ratio.png",
                             labels=["lagrangian", "uniform"]))
        assert out.exists() and out.stat().st_size > 0

    def test_rerender_overwrites_identically_named_output(self, tmp_path):
        job = PlotJob(inputs=[DATA / "csf_snapshots.csv"], kind="evolution",
                      output=tmp_path / "same.png")
        first = render(job).stat().st_size
        second = render(job).stat().st_size
        assert first > 0 and second > 0

    def test_unknown_kind_rejected(self, tmp_path):
        with pytest.raises(SchemaMismatch):
            build_figure(PlotJob(inputs=[DATA / "csf_snapshots.csv"],
                                 kind="waterfall", output=tmp_path / "x.png"))


class TestAnalyticOverlayAgreement:
    def test_final_curve_matches_shrinking_circle_in_pixel_space(self, tmp_path):
        # The plotted final polyline must sit within 1% of the analytic
        # radius sqrt(1 - 2T), measured in display pixels.
        final_time = 0.25
        radius = math.sqrt(1.0 - 2.0 * final_time)
        job = PlotJob(inputs=[DATA / "csf_snapshots.csv"], kind="evolution",
                      output=tmp_path / "overlay.png",
                      overlay_circle_radius=radius)
        fig = build_figure(job)
        fig.canvas.draw()
        ax = fig.axes[0]
        line = next(l for l in ax.get_lines() if l.get_gid() == "final-vertices")
        points = np.column_stack(line.get_data())
        pixels = ax.transData.transform(points)
        center = ax.transData.transform([[0.0, 0.0]])[0]
        radius_px = np.linalg.norm(ax.transData.transform([[radius, 0.0]])[0]
                                   - center)
        deviation = np.abs(np.linalg.norm(pixels - center, axis=1) - radius_px)
        assert deviation.max() <= 0.01 * radius_px
        render(job)


class TestCommandLine:
    def test_cli_renders(self, tmp_path):
        code = main([str(DATA / "csf_snapshots.csv"), "--kind", "evolution",
                     "--out", str(tmp_path / "fig.png")])
        assert code == 0
        assert (tmp_path / "fig.png").exists()

    def test_cli_reports_schema_error(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("time,vertex,x,y\n")
        code = main([str(bad), "--kind", "evolution",
                     "--out", str(tmp_path / "fig.png")])
        assert code == 1
