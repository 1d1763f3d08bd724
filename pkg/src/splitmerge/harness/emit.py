"""Result serialization: deterministic CSV and self-contained SVG plots.

CSV column order is fixed (``k, strategy, contamination, median_abs_error,
mean_abs_error, coverage, bound, condition_holds``); floats are written
with 12 significant digits, booleans lowercase, missing values as empty
fields, rows CRLF-terminated.  Identical tables always serialize to
identical bytes.

The SVG writer draws one polyline per (strategy, contamination) series
with circle markers, optional log axes, and — when rows carry a
closed-form bound — an overlay line that is solid where the bound's side
condition holds and dashed where it does not.  The markup is assembled
from scratch with stable float formatting, so equal inputs give
byte-identical files.
"""

from __future__ import annotations

import csv
import io
import math
import os
from xml.sax.saxutils import escape

from .experiment import ResultRow, ResultTable

__all__ = ["CSV_FIELDS", "emit_csv", "render_csv", "emit_svg", "render_svg"]

CSV_FIELDS = (
    "k",
    "strategy",
    "contamination",
    "median_abs_error",
    "mean_abs_error",
    "coverage",
    "bound",
    "condition_holds",
)

_WIDTH = 720.0
_HEIGHT = 480.0
_MARGIN_LEFT = 72.0
_MARGIN_RIGHT = 180.0
_MARGIN_TOP = 42.0
_MARGIN_BOTTOM = 58.0

_PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#17becf",
    "#7f7f7f",
)

_Y_FIELDS = ("median_abs_error", "mean_abs_error", "coverage")
_X_FIELDS = ("k", "contamination")


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return f"{value:.12g}"


def render_csv(table: ResultTable) -> str:
    """Serialize a result table to CSV text (CRLF line endings)."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\r\n")
    writer.writerow(CSV_FIELDS)
    for row in table.rows:
        writer.writerow(
            [
                _format_cell(row.k),
                row.strategy,
                _format_cell(row.contamination),
                _format_cell(row.median_abs_error),
                _format_cell(row.mean_abs_error),
                _format_cell(row.coverage),
                _format_cell(row.bound),
                _format_cell(row.condition_holds),
            ]
        )
    return buffer.getvalue()


def emit_csv(table: ResultTable, destination: "str | os.PathLike") -> None:
    """Write the table as CSV to a file path."""
    text = render_csv(table)
    with open(destination, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------


def _fmt(value: float) -> str:
    """Stable coordinate formatting for SVG attributes."""
    return f"{value:.2f}"


def _tick_label(value: float) -> str:
    return f"{value:g}"


def _linear_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / target
    magnitude = 10.0 ** math.floor(math.log10(raw))
    step = 10.0 * magnitude
    for multiplier in (1.0, 2.0, 5.0):
        if raw <= multiplier * magnitude:
            step = multiplier * magnitude
            break
    first = math.ceil(lo / step - 1e-9) * step
    ticks = []
    value = first
    while value <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(value) < 1e-12 * step else value)
        value += step
    return ticks


def _log_ticks(lo: float, hi: float) -> list[float]:
    first = math.floor(math.log10(lo) + 1e-12)
    last = math.ceil(math.log10(hi) - 1e-12)
    decades = [10.0**e for e in range(first, last + 1)]
    ticks = [t for t in decades if lo / 1.0000001 <= t <= hi * 1.0000001]
    if len(ticks) < 3:
        subs = []
        for e in range(first - 1, last + 1):
            for mult in (1.0, 2.0, 5.0):
                t = mult * 10.0**e
                if lo / 1.0000001 <= t <= hi * 1.0000001:
                    subs.append(t)
        ticks = sorted(set(subs))
    return ticks


class _Scale:
    """Maps data values to pixel coordinates, linear or log10."""

    def __init__(self, lo: float, hi: float, pixel_lo: float, pixel_hi: float, log: bool):
        if log:
            if lo <= 0:
                raise ValueError("log scale requires strictly positive values")
            lo, hi = math.log10(lo), math.log10(hi)
        if hi == lo:
            pad = max(abs(lo) * 0.05, 0.5)
            lo, hi = lo - pad, hi + pad
        else:
            pad = (hi - lo) * 0.05
            lo, hi = lo - pad, hi + pad
        self.lo = lo
        self.hi = hi
        self.pixel_lo = pixel_lo
        self.pixel_hi = pixel_hi
        self.log = log

    def __call__(self, value: float) -> float:
        v = math.log10(value) if self.log else value
        frac = (v - self.lo) / (self.hi - self.lo)
        return self.pixel_lo + frac * (self.pixel_hi - self.pixel_lo)

    def data_range(self) -> tuple[float, float]:
        if self.log:
            return 10.0**self.lo, 10.0**self.hi
        return self.lo, self.hi


def _row_value(row: ResultRow, field: str):
    return getattr(row, field)


def _collect_series(table: ResultTable, x_field: str, y_field: str):
    """Group rows into ((strategy, contamination) -> [(x, y)]) in first-seen order."""
    series: dict[tuple[str, int], list[tuple[float, float]]] = {}
    for row in table.rows:
        y = _row_value(row, y_field)
        if y is None:
            continue
        x = float(_row_value(row, x_field))
        key = (row.strategy, row.contamination)
        series.setdefault(key, []).append((x, float(y)))
    return series


def _series_label(key: tuple[str, int], x_field: str, multiple_counts: bool) -> str:
    strategy, contamination = key
    if x_field == "contamination" or not multiple_counts:
        return strategy
    return f"{strategy} (outliers={contamination})"


def render_svg(
    table: ResultTable,
    *,
    x_field: str = "k",
    y_field: str = "median_abs_error",
    logx: bool = False,
    logy: bool = False,
    title: str | None = None,
) -> str:
    """Render the table as a standalone SVG document (returned as text)."""
    if x_field not in _X_FIELDS:
        raise ValueError(f"x_field must be one of {_X_FIELDS}, got {x_field!r}")
    if y_field not in _Y_FIELDS:
        raise ValueError(f"y_field must be one of {_Y_FIELDS}, got {y_field!r}")
    series = _collect_series(table, x_field, y_field)
    bound_series: dict[tuple[str, int], list[tuple[float, float, bool]]] = {}
    if y_field == "median_abs_error":
        for row in table.rows:
            if row.bound is None:
                continue
            key = (row.strategy, row.contamination)
            bound_series.setdefault(key, []).append(
                (float(_row_value(row, x_field)), float(row.bound), bool(row.condition_holds))
            )
    if not series and not bound_series:
        raise ValueError("nothing to plot: no rows with the requested fields")

    xs = [p[0] for pts in series.values() for p in pts]
    ys = [p[1] for pts in series.values() for p in pts]
    xs += [p[0] for pts in bound_series.values() for p in pts]
    ys += [p[1] for pts in bound_series.values() for p in pts]
    if logx and min(xs) <= 0:
        raise ValueError("log x axis requires strictly positive x values")
    if logy and min(ys) <= 0:
        raise ValueError("log y axis requires strictly positive y values")

    x_scale = _Scale(min(xs), max(xs), _MARGIN_LEFT, _WIDTH - _MARGIN_RIGHT, logx)
    # SVG y grows downward: map data-high to the top margin.
    y_scale = _Scale(min(ys), max(ys), _HEIGHT - _MARGIN_BOTTOM, _MARGIN_TOP, logy)

    parts: list[str] = []
    parts.append('<?xml version="1.0" encoding="UTF-8"?>')
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(_WIDTH)}" '
        f'height="{_fmt(_HEIGHT)}" viewBox="0 0 {_fmt(_WIDTH)} {_fmt(_HEIGHT)}">'
    )
    parts.append(f'<rect width="{_fmt(_WIDTH)}" height="{_fmt(_HEIGHT)}" fill="white"/>')

    plot_left, plot_right = _MARGIN_LEFT, _WIDTH - _MARGIN_RIGHT
    plot_top, plot_bottom = _MARGIN_TOP, _HEIGHT - _MARGIN_BOTTOM

    if title:
        parts.append(
            f'<text x="{_fmt((plot_left + plot_right) / 2)}" y="24" '
            f'text-anchor="middle" font-family="sans-serif" font-size="15">'
            f"{escape(title)}</text>"
        )

    # Axes.
    parts.append(
        f'<line x1="{_fmt(plot_left)}" y1="{_fmt(plot_bottom)}" '
        f'x2="{_fmt(plot_right)}" y2="{_fmt(plot_bottom)}" stroke="black"/>'
    )
    parts.append(
        f'<line x1="{_fmt(plot_left)}" y1="{_fmt(plot_top)}" '
        f'x2="{_fmt(plot_left)}" y2="{_fmt(plot_bottom)}" stroke="black"/>'
    )

    x_lo, x_hi = x_scale.data_range()
    y_lo, y_hi = y_scale.data_range()
    x_ticks = _log_ticks(x_lo, x_hi) if logx else _linear_ticks(x_lo, x_hi)
    y_ticks = _log_ticks(y_lo, y_hi) if logy else _linear_ticks(y_lo, y_hi)

    for tick in x_ticks:
        px = x_scale(tick)
        parts.append(
            f'<line x1="{_fmt(px)}" y1="{_fmt(plot_bottom)}" '
            f'x2="{_fmt(px)}" y2="{_fmt(plot_bottom + 5)}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_fmt(px)}" y="{_fmt(plot_bottom + 19)}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{_tick_label(tick)}</text>'
        )
    for tick in y_ticks:
        py = y_scale(tick)
        parts.append(
            f'<line x1="{_fmt(plot_left - 5)}" y1="{_fmt(py)}" '
            f'x2="{_fmt(plot_left)}" y2="{_fmt(py)}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_fmt(plot_left - 8)}" y="{_fmt(py + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_tick_label(tick)}</text>'
        )

    # Axis titles.
    parts.append(
        f'<text x="{_fmt((plot_left + plot_right) / 2)}" y="{_fmt(_HEIGHT - 14)}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="12">'
        f"{escape(x_field)}</text>"
    )
    parts.append(
        f'<text x="18" y="{_fmt((plot_top + plot_bottom) / 2)}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 18 {_fmt((plot_top + plot_bottom) / 2)})">'
        f"{escape(y_field)}</text>"
    )

    multiple_counts = len({key[1] for key in series} | {key[1] for key in bound_series}) > 1
    legend: list[tuple[str, str, bool]] = []  # (label, color, dashed)

    for index, (key, points) in enumerate(series.items()):
        color = _PALETTE[index % len(_PALETTE)]
        label = _series_label(key, x_field, multiple_counts)
        legend.append((label, color, False))
        coords = [(x_scale(x), y_scale(y)) for x, y in points]
        if len(coords) > 1:
            path = " ".join(f"{_fmt(px)},{_fmt(py)}" for px, py in coords)
            parts.append(
                f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>'
            )
        for px, py in coords:
            parts.append(f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="3" fill="{color}"/>')

    if bound_series:
        bound_color = "#000000"
        for key, triples in bound_series.items():
            # Solid segments where the side condition holds, dashed where not.
            segments: list[tuple[bool, list[tuple[float, float]]]] = []
            for x, y, holds in triples:
                if segments and segments[-1][0] == holds:
                    segments[-1][1].append((x, y))
                else:
                    if segments:
                        # Connect adjacent segments so the line is continuous.
                        segments[-1][1].append((x, y))
                        segments.append((holds, [segments[-1][1][-1]]))
                    else:
                        segments.append((holds, [(x, y)]))
            for holds, points in segments:
                if len(points) < 2:
                    px, py = x_scale(points[0][0]), y_scale(points[0][1])
                    dash = "" if holds else ' stroke-dasharray="6,4"'
                    parts.append(
                        f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="2.5" '
                        f'fill="none" stroke="{bound_color}"{dash}/>'
                    )
                    continue
                path = " ".join(
                    f"{_fmt(x_scale(x))},{_fmt(y_scale(y))}" for x, y in points
                )
                dash = "" if holds else ' stroke-dasharray="6,4"'
                parts.append(
                    f'<polyline points="{path}" fill="none" stroke="{bound_color}" '
                    f'stroke-width="1.5"{dash}/>'
                )
        legend.append(("closed-form bound (dashed: condition fails)", bound_color, True))

    legend_x = plot_right + 14.0
    legend_y = plot_top + 6.0
    for index, (label, color, dashed) in enumerate(legend):
        y0 = legend_y + 18.0 * index
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        parts.append(
            f'<line x1="{_fmt(legend_x)}" y1="{_fmt(y0)}" x2="{_fmt(legend_x + 22)}" '
            f'y2="{_fmt(y0)}" stroke="{color}" stroke-width="1.5"{dash}/>'
        )
        parts.append(
            f'<text x="{_fmt(legend_x + 28)}" y="{_fmt(y0 + 4)}" '
            f'font-family="sans-serif" font-size="11">{escape(label)}</text>'
        )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_svg(
    table: ResultTable,
    destination: "str | os.PathLike",
    *,
    x_field: str = "k",
    y_field: str = "median_abs_error",
    logx: bool = False,
    logy: bool = False,
    title: str | None = None,
) -> None:
    """Render the table to an SVG file."""
    text = render_svg(
        table, x_field=x_field, y_field=y_field, logx=logx, logy=logy, title=title
    )
    with open(destination, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)
