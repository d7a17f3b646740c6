"""Deterministic report emission: delimited tables and SVG line charts.

Charts are rendered with matplotlib's Agg backend straight to SVG files. Two
renders of the same spec are byte-identical: the SVG hash salt is pinned and
the date metadata is stripped, which is what the reproducibility contract of
the CLI rests on. Numbers in CSV tables are written with repr so they survive
a load/save round trip bit-exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import ValidationError

_SVG_SALT = "marketdyn"


@dataclass(frozen=True)
class ChartSeries:
    label: str
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if x.shape != y.shape or x.ndim != 1 or len(x) == 0:
            raise ValidationError(f"series {self.label!r} needs matching non-empty x and y")


@dataclass(frozen=True)
class ChartSpec:
    """A line chart: one or more series over a shared x-domain."""

    series: tuple[ChartSeries, ...]
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    logx: bool = False
    logy: bool = False
    markers: tuple[tuple[float, float, str], ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "series", tuple(self.series))
        if not self.series:
            raise ValidationError("a chart needs at least one series")
        x0 = self.series[0].x
        for s in self.series[1:]:
            if s.x[0] != x0[0] or s.x[-1] != x0[-1]:
                raise ValidationError(
                    f"series {s.label!r} spans [{s.x[0]}, {s.x[-1]}], "
                    f"expected the shared x-domain [{x0[0]}, {x0[-1]}]"
                )


def render_svg(spec: ChartSpec, path) -> None:
    """Render the chart spec to a self-contained, byte-stable SVG file."""
    path = Path(path)
    with plt.rc_context({"svg.hashsalt": _SVG_SALT}):
        fig, ax = plt.subplots(figsize=(7.0, 4.4))
        try:
            for s in spec.series:
                ax.plot(s.x, s.y, label=s.label, linewidth=1.4)
            for mx, my, label in spec.markers:
                ax.plot([mx], [my], marker="o", markersize=6, linestyle="none", label=label)
            if spec.logx:
                ax.set_xscale("log")
            if spec.logy:
                ax.set_yscale("log")
            ax.set_title(spec.title)
            ax.set_xlabel(spec.xlabel)
            ax.set_ylabel(spec.ylabel)
            ax.grid(True, alpha=0.3)
            ax.legend(loc="best", fontsize=9)
            fig.tight_layout()
            fig.savefig(path, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_table(path, header, rows) -> None:
    """Write a CSV table; floats via repr for exact round trips."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([_format_cell(cell) for cell in row])
