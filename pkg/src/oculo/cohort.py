"""Cohort aggregation: min-max normalization and boxplot statistics.

Each parameter is normalized to [0, 1] over all subjects of both groups
pooled, then summarized per (parameter, group) as min, quartiles, and
max. Whiskers are the raw extremes, not 1.5 IQR fences.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import DegenerateParameter, EmptyGroup, MalformedRecord
from .session_io import COLUMN_FIELDS, FeatureSet


class Group(Enum):
    HEALTHY = "Healthy"
    PD = "PD"


@dataclass(frozen=True)
class CohortRow:
    subject_id: str
    group: Group
    features: FeatureSet


@dataclass
class CohortTable:
    rows: list[CohortRow]

    def __post_init__(self) -> None:
        ids = [r.subject_id for r in self.rows]
        if len(set(ids)) != len(ids):
            raise ValueError("subject ids must be unique")


@dataclass(frozen=True)
class BoxplotStats:
    parameter: str  # report column name, e.g. "RL"
    group: Group
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float


def normalize_cohort(table: CohortTable) -> CohortTable:
    """Min-max map each parameter to [0, 1] across both groups pooled.

    Absent values stay absent and do not enter the min/max. A parameter
    present for at least one subject but with zero range is degenerate.
    """
    spans: dict[str, Optional[tuple[float, float]]] = {}
    for col, field in COLUMN_FIELDS:
        values = [
            getattr(r.features, field)
            for r in table.rows
            if getattr(r.features, field) is not None
        ]
        if not values:
            spans[field] = None  # parameter absent everywhere; nothing to map
            continue
        lo, hi = min(values), max(values)
        if hi == lo:
            raise DegenerateParameter(f"{col} has zero range across the cohort")
        spans[field] = (lo, hi)
    out = []
    for r in table.rows:
        kwargs = {}
        for _, field in COLUMN_FIELDS:
            v = getattr(r.features, field)
            if v is None or spans[field] is None:
                kwargs[field] = None
            else:
                lo, hi = spans[field]
                kwargs[field] = (v - lo) / (hi - lo)
        out.append(CohortRow(r.subject_id, r.group, FeatureSet(**kwargs)))
    return CohortTable(out)


def boxplot_stats(table: CohortTable) -> list[BoxplotStats]:
    """Per (parameter, group): min, quartiles by linear interpolation, max.

    Cells with no present values are omitted; rows follow the report
    column order with Healthy before PD.
    """
    if not table.rows:
        raise EmptyGroup("cohort table has no rows")
    stats = []
    for col, field in COLUMN_FIELDS:
        for group in (Group.HEALTHY, Group.PD):
            values = [
                getattr(r.features, field)
                for r in table.rows
                if r.group is group and getattr(r.features, field) is not None
            ]
            if not values:
                continue
            arr = np.asarray(values, dtype=np.float64)
            q1, med, q3 = np.percentile(arr, [25.0, 50.0, 75.0])
            stats.append(
                BoxplotStats(col, group, float(arr.min()), float(q1), float(med),
                             float(q3), float(arr.max()))
            )
    return stats


def boxplot_csv(stats: list[BoxplotStats]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["parameter", "group", "min", "q1", "median", "q3", "max"])
    for s in stats:
        w.writerow([s.parameter, s.group.value, repr(s.minimum), repr(s.q1),
                    repr(s.median), repr(s.q3), repr(s.maximum)])
    return buf.getvalue()


def parse_group_file(text: str) -> dict[str, Group]:
    """Parse `subject_id,group` lines; a header line is tolerated."""
    assignments: dict[str, Group] = {}
    by_name = {g.value.lower(): g for g in Group}
    first = True
    for i, ln in enumerate(text.splitlines()):
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        parts = [p.strip() for p in ln.split(",")]
        if len(parts) != 2:
            raise MalformedRecord(f"group file line {i + 1}: expected 2 fields")
        if first and parts[0].lower() == "subject_id":
            first = False
            continue
        first = False
        key = parts[1].lower()
        if key not in by_name:
            raise MalformedRecord(f"group file line {i + 1}: unknown group {parts[1]!r}")
        assignments[parts[0]] = by_name[key]
    return assignments


# --- minimal SVG boxplot rendering ------------------------------------------

_SVG_W, _SVG_H = 900, 360
_PLOT_LEFT, _PLOT_RIGHT, _PLOT_TOP, _PLOT_BOTTOM = 50, 20, 20, 40
_GROUP_FILL = {Group.HEALTHY: "#27408b", Group.PD: "#cd5b45"}


def boxplot_svg(stats: list[BoxplotStats]) -> str:
    """Hand-rolled vector boxplots on a fixed [0, 1] axis, no renderer."""
    params = []
    for s in stats:
        if s.parameter not in params:
            params.append(s.parameter)
    plot_w = _SVG_W - _PLOT_LEFT - _PLOT_RIGHT
    plot_h = _SVG_H - _PLOT_TOP - _PLOT_BOTTOM
    slot = plot_w / max(len(params), 1)
    box_w = slot / 3.2

    def y(v: float) -> float:
        return _PLOT_TOP + (1.0 - v) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" height="{_SVG_H}">',
        f'<rect width="{_SVG_W}" height="{_SVG_H}" fill="white"/>',
    ]
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        ty = y(tick)
        parts.append(
            f'<line x1="{_PLOT_LEFT}" y1="{ty:.2f}" x2="{_SVG_W - _PLOT_RIGHT}" '
            f'y2="{ty:.2f}" stroke="#dddddd"/>'
        )
        parts.append(
            f'<text x="{_PLOT_LEFT - 8}" y="{ty + 4:.2f}" font-size="11" '
            f'text-anchor="end">{tick:g}</text>'
        )
    for i, param in enumerate(params):
        cx = _PLOT_LEFT + (i + 0.5) * slot
        parts.append(
            f'<text x="{cx:.2f}" y="{_SVG_H - _PLOT_BOTTOM + 18}" font-size="12" '
            f'text-anchor="middle">{param}</text>'
        )
        for s in stats:
            if s.parameter != param:
                continue
            off = -0.55 * box_w if s.group is Group.HEALTHY else 0.55 * box_w
            x = cx + off
            color = _GROUP_FILL[s.group]
            parts.append(
                f'<line x1="{x:.2f}" y1="{y(s.minimum):.2f}" x2="{x:.2f}" '
                f'y2="{y(s.maximum):.2f}" stroke="{color}"/>'
            )
            for whisker in (s.minimum, s.maximum):
                parts.append(
                    f'<line x1="{x - box_w / 4:.2f}" y1="{y(whisker):.2f}" '
                    f'x2="{x + box_w / 4:.2f}" y2="{y(whisker):.2f}" stroke="{color}"/>'
                )
            parts.append(
                f'<rect x="{x - box_w / 2:.2f}" y="{y(s.q3):.2f}" width="{box_w:.2f}" '
                f'height="{max(y(s.q1) - y(s.q3), 0.5):.2f}" fill="{color}" '
                f'fill-opacity="0.35" stroke="{color}"/>'
            )
            parts.append(
                f'<line x1="{x - box_w / 2:.2f}" y1="{y(s.median):.2f}" '
                f'x2="{x + box_w / 2:.2f}" y2="{y(s.median):.2f}" '
                f'stroke="{color}" stroke-width="2"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
