"""Readers for the solver's diagnostics.csv and snapshots.csv files."""

from __future__ import annotations

import csv

import numpy as np


class SchemaMismatch(Exception):
    """A CSV input does not match the expected column layout."""


DIAGNOSTIC_COLUMNS = ("step", "time", "Q_mesh", "e_A", "e_L", "r_g_sq", "r_m_sq",
                      "E_geom", "gap_g", "iso_deficit", "newton_iters", "min_edge")
SNAPSHOT_COLUMNS = ("time", "vertex", "x", "y")


def _read_rows(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise SchemaMismatch(f"{path}: empty file")
    return rows[0], rows[1:]


def read_diagnostics(path) -> dict:
    """Column arrays of a diagnostics.csv, lambda_* columns included if present."""
    header, rows = _read_rows(path)
    for column in DIAGNOSTIC_COLUMNS:
        if column not in header:
            raise SchemaMismatch(f"{path}: missing column {column!r}")
    if not rows:
        raise SchemaMismatch(f"{path}: no diagnostic rows")
    data = np.array(rows, dtype=float)
    return {name: data[:, i] for i, name in enumerate(header)}


def read_snapshots(path) -> list:
    """Snapshot polylines as a list of (time, vertices) in file order."""
    header, rows = _read_rows(path)
    if list(header) != list(SNAPSHOT_COLUMNS):
        missing = [c for c in SNAPSHOT_COLUMNS if c not in header]
        offender = missing[0] if missing else header[0]
        raise SchemaMismatch(f"{path}: expected columns {SNAPSHOT_COLUMNS}, "
                             f"offending column {offender!r}")
    if not rows:
        raise SchemaMismatch(f"{path}: no snapshot rows")
    data = np.array(rows, dtype=float)
    snapshots = []
    for t in dict.fromkeys(data[:, 0]):  # unique times, order preserved
        block = data[data[:, 0] == t]
        order = np.argsort(block[:, 1])
        snapshots.append((float(t), block[order][:, 2:4]))
    return snapshots
