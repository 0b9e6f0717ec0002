"""Deterministic CSV and JSON output.

Every table has a fixed column order. Floats are written with ``repr`` so
they round-trip exactly and reruns of the same build are byte-identical.
"""

import csv
import json
import math
from collections.abc import Iterable, Mapping, Sequence
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np

from bohmlab.core.models import (
    AsymptoticCurve,
    ChaosReport,
    NodeTrack,
    Trajectory,
    XPointRecord,
)
from bohmlab.core.wavefield import GRID_COLUMNS

NODE_COLUMNS = ("track_id", "kind", "t", "x", "y", "status")
EVENT_COLUMNS = ("track_id", "t", "event_kind", "partner_fixed_id")
XPOINT_COLUMNS = ("node_id", "t", "x", "y", "eig1", "eig2")
ASYMPTOTIC_COLUMNS = ("branch", "s", "u", "v")
TRAJ_COLUMNS = ("traj_id", "t", "x", "y")
LOOP_COLUMNS = ("traj_id", "node_id", "t_start", "t_end", "winding")
FRAME_COLUMNS = ("t", *GRID_COLUMNS)
CHAOS_COLUMNS = ("ic_x", "ic_y", "t0", "horizon", "stretching_number", "classification")
ORACLE_COLUMNS = ("check", "t", "value")

Row = Sequence[Any]


def format_cell(value: Any) -> str:
    """Text of one CSV cell."""
    if value is None:
        return ""
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        return repr(value)
    return str(value)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Row]) -> int:
    """Write a header and rows; returns the number of data rows."""
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"{path.name}: row has {len(row)} cells, expected {len(columns)}")
            writer.writerow([format_cell(cell) for cell in row])
            count += 1
    return count


def read_csv(path: Path) -> list[dict[str, str]]:
    """Rows of a CSV written by :func:`write_csv`, as strings."""
    with path.open(newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def write_json(path: Path, data: Mapping[str, Any]) -> None:
    """Pretty-printed JSON with sorted keys and a trailing newline."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# =============================================================================
# Row builders
# =============================================================================


def node_rows(tracks: Sequence[NodeTrack]) -> list[Row]:
    rows: list[Row] = []
    for track in sorted(tracks, key=lambda tr: tr.id):
        for (t, x, y), status in zip(track.samples, track.statuses):
            rows.append((track.id, track.kind, t, x, y, status))
    return rows


def event_rows(tracks: Sequence[NodeTrack]) -> list[Row]:
    rows: list[Row] = []
    for track in sorted(tracks, key=lambda tr: tr.id):
        for event in track.events:
            rows.append((track.id, event.t, event.kind, event.partner_fixed_id))
    return rows


def xpoint_rows(xpoints: Sequence[XPointRecord]) -> list[Row]:
    return [
        (xp.frame_node_id, xp.t, xp.absolute[0], xp.absolute[1], xp.eigenvalues[0], xp.eigenvalues[1])
        for xp in xpoints
    ]


def asymptotic_rows(curves: Sequence[AsymptoticCurve]) -> list[Row]:
    return [(curve.branch, s, u, v) for curve in curves for s, u, v in curve.samples]


def trajectory_rows(trajectories: Sequence[Trajectory]) -> list[Row]:
    return [
        (index, t, x, y)
        for index, traj in enumerate(trajectories, start=1)
        for t, x, y in traj.samples
    ]


def loop_rows(trajectories: Sequence[Trajectory]) -> list[Row]:
    return [
        (index, loop.node_id, loop.t_start, loop.t_end, loop.winding)
        for index, traj in enumerate(trajectories, start=1)
        for loop in traj.loop_annotations
    ]


def grid_rows(grid: Mapping[str, np.ndarray], t: float | None = None) -> list[Row]:
    """Flatten a field grid row-major; a time column goes first when t is given."""
    columns = [np.ravel(grid[name]) for name in GRID_COLUMNS]
    rows: list[Row] = []
    for values in zip(*columns):
        rows.append(values if t is None else (t, *values))
    return rows


def chaos_rows(reports: Sequence[ChaosReport]) -> list[Row]:
    return [
        (r.ic[0], r.ic[1], r.ic[2], r.horizon, r.stretching_number, r.classification)
        for r in reports
    ]
