"""Post-processing figures for curveflow diagnostics and snapshot CSV files."""

from .render import FIGURE_KINDS, PlotJob, build_figure, render
from .schema import SchemaMismatch, read_diagnostics, read_snapshots

__version__ = "0.1.0"
