"""CSV emitters and SVG heatmaps for analytics output."""

from __future__ import annotations

import csv
import io
from html import escape
from typing import Sequence

import numpy as np

from .analytics import KendallMatrix, OutputRecord
from .solver import format_value

CELL = 22
LABEL_W = 90
HEADER_H = 60
LEGEND_H = 40


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def country_importance_csv(values: dict[tuple[str, int], float], regions: Sequence[str],
                           years: Sequence[int], rule_label: str) -> str:
    rows = [(c, y, rule_label, format_value(values[(c, y)]))
            for y in years for c in regions if (c, y) in values]
    return _csv_text(("country", "year", "rule", "importance"), rows)


def industry_importance_csv(values: dict[tuple[str, str], float], regions: Sequence[str],
                            industries: Sequence[str]) -> str:
    rows = [(c, k, format_value(values[(c, k)]))
            for c in regions for k in industries if (c, k) in values]
    return _csv_text(("country", "industry", "importance"), rows)


def kendall_csv(km: KendallMatrix) -> str:
    rows = [(km.country, ya, yb, format_value(km.tau[a, b]))
            for a, ya in enumerate(km.years) for b, yb in enumerate(km.years)]
    return _csv_text(("country", "year_a", "year_b", "tau"), rows)


def outputs_csv(records: Sequence[OutputRecord]) -> str:
    ordered = sorted(records, key=lambda r: r.year)  # stable: keeps region order within a year
    rows = [(r.country, r.year, format_value(r.output), r.components()) for r in ordered]
    return _csv_text(("country", "year", "output", "components"), rows)


def _color(t: float) -> str:
    """Linear blue-to-red interpolation for ``t`` in [0, 1]."""
    t = min(max(t, 0.0), 1.0)
    red = int(round(255 * t))
    blue = int(round(255 * (1 - t)))
    return f"#{red:02x}00{blue:02x}"


def heatmap_svg(matrix, row_labels: Sequence, col_labels: Sequence, title: str = "",
                vmin: float | None = None, vmax: float | None = None) -> str:
    """Render a matrix as an SVG heatmap, blue for low values and red for high.

    The colour scale spans ``[vmin, vmax]`` (the finite data range by
    default) and is printed in the legend. NaN cells are drawn grey.
    """
    M = np.asarray(matrix, dtype=float)
    n_rows, n_cols = M.shape
    if len(row_labels) != n_rows or len(col_labels) != n_cols:
        raise ValueError("label counts must match matrix shape")
    finite = M[np.isfinite(M)]
    if vmin is None:
        vmin = float(finite.min()) if finite.size else 0.0
    if vmax is None:
        vmax = float(finite.max()) if finite.size else 1.0
    lo, hi = float(vmin), float(vmax)
    span = hi - lo

    width = LABEL_W + n_cols * CELL + 10
    height = HEADER_H + n_rows * CELL + LEGEND_H
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="10">']
    if title:
        out.append(f'<text x="4" y="14" font-size="12">{escape(title)}</text>')
    for j, label in enumerate(col_labels):
        x = LABEL_W + j * CELL + CELL / 2
        out.append(f'<text x="{x:g}" y="{HEADER_H - 4}" transform="rotate(-60 {x:g} {HEADER_H - 4})">'
                   f'{escape(str(label))}</text>')
    for i, label in enumerate(row_labels):
        y = HEADER_H + i * CELL
        out.append(f'<text x="{LABEL_W - 4}" y="{y + CELL * 0.7:g}" text-anchor="end">{escape(str(label))}</text>')
        for j in range(n_cols):
            v = M[i, j]
            if np.isfinite(v):
                fill = _color((v - lo) / span if span > 0 else 0.0)
                tip = format_value(v)
            else:
                fill, tip = "#999999", "nan"
            out.append(f'<rect x="{LABEL_W + j * CELL}" y="{y}" width="{CELL}" height="{CELL}" '
                       f'fill="{fill}"><title>{escape(str(label))} / {escape(str(col_labels[j]))}: {tip}</title></rect>')
    ly = HEADER_H + n_rows * CELL + 12
    out.append(f'<rect x="{LABEL_W}" y="{ly}" width="{CELL}" height="10" fill="{_color(0.0)}"/>')
    out.append(f'<rect x="{LABEL_W + CELL}" y="{ly}" width="{CELL}" height="10" fill="{_color(1.0)}"/>')
    out.append(f'<text x="{LABEL_W + 2 * CELL + 6}" y="{ly + 9}">'
               f'range {format_value(lo)} (blue) to {format_value(hi)} (red)</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
