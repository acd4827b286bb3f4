"""Deterministic chart rendering: hand-assembled SVG and binary PGM.

Output is byte-stable for identical inputs: fixed float formatting, no
timestamps, no generated ids. Bird's-eye charts put x to the right and z
downward, matching grid row/column order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import exports
from .engine import (
    INTIMATE_MAX,
    PERSONAL_MAX,
    SOCIAL_MAX,
    HeightHistogram,
    OccupancyGrid,
    QuiverField,
    ZoneHistogram,
)

__all__ = [
    "RenderSpec",
    "render_heatmap",
    "render_histogram",
    "render_quiver",
]

Histogram = Union[ZoneHistogram, HeightHistogram]

_RAMPS = {
    "heat": (
        (0.00, (12, 12, 46)),
        (0.35, (120, 28, 109)),
        (0.65, (231, 77, 50)),
        (0.85, (250, 173, 64)),
        (1.00, (252, 255, 164)),
    ),
    "gray": (
        (0.00, (0, 0, 0)),
        (1.00, (255, 255, 255)),
    ),
}

_SERIES_COLORS = ("#4477aa", "#ee6677")


@dataclass(frozen=True)
class RenderSpec:
    """Rendering knobs shared by the chart functions."""

    format: str = "svg"
    ramp: str = "heat"
    cell_px: int = 12
    arrow_scale: float = 0.45
    show_grid: bool = False
    outline: bool = True
    marks: tuple[tuple[float, float], ...] = ()
    chart_width: int = 640
    chart_height: int = 360
    # None draws proxemic boundaries on distance histograms; () disables.
    zone_markers: Optional[tuple[float, ...]] = None


def _ramp_color(name: str, t: float) -> str:
    try:
        stops = _RAMPS[name]
    except KeyError:
        raise ValueError(f"unknown ramp: {name!r}") from None
    t = min(1.0, max(0.0, t))
    for (t0, c0), (t1, c1) in zip(stops, stops[1:]):
        if t <= t1:
            frac = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
            rgb = tuple(round(a + (b - a) * frac) for a, b in zip(c0, c1))
            return "#%02x%02x%02x" % rgb
    rgb = stops[-1][1]
    return "#%02x%02x%02x" % rgb


def _n(value: float) -> str:
    # fixed two decimals keeps the byte stream stable
    return f"{value:.2f}"


def _svg_open(width: int, height: int) -> str:
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">'
    )


def _counts_of(grid: "OccupancyGrid | np.ndarray") -> np.ndarray:
    if isinstance(grid, OccupancyGrid):
        return grid.counts
    return np.asarray(grid)


def _intensity(counts: np.ndarray) -> np.ndarray:
    # log(1 + count) compresses hotspots without hiding low occupancy
    peak = counts.max()
    if peak <= 0:
        return np.zeros(counts.shape, dtype=np.float64)
    return np.log1p(counts) / math.log1p(peak)


# ---------------------------------------------------------------------------
# heatmap
# ---------------------------------------------------------------------------


def render_heatmap(grid: "OccupancyGrid | np.ndarray", spec: RenderSpec = RenderSpec()):
    """Occupancy heatmap. Returns SVG text, PGM bytes, or CSV text."""
    counts = _counts_of(grid)
    if counts.ndim != 2:
        raise ValueError("grid must be 2-dimensional")
    if spec.format == "csv":
        return exports.grid_to_csv(counts)
    if spec.format == "pgm":
        return _heatmap_pgm(counts)
    if spec.format != "svg":
        raise ValueError(f"unsupported format: {spec.format!r}")

    nrows, ncols = counts.shape
    cell = spec.cell_px
    width, height = ncols * cell, nrows * cell
    scale = _intensity(counts)
    parts = [_svg_open(width, height)]
    parts.append(
        f'<rect x="0" y="0" width="{width}" height="{height}" '
        f'fill="{_ramp_color(spec.ramp, 0.0)}"/>'
    )
    for r in range(nrows):
        for c in range(ncols):
            if counts[r, c] > 0:
                parts.append(
                    f'<rect x="{c * cell}" y="{r * cell}" width="{cell}" '
                    f'height="{cell}" fill="{_ramp_color(spec.ramp, scale[r, c])}"/>'
                )
    if spec.show_grid:
        for c in range(1, ncols):
            parts.append(
                f'<line x1="{c * cell}" y1="0" x2="{c * cell}" y2="{height}" '
                f'stroke="#444444" stroke-width="0.5"/>'
            )
        for r in range(1, nrows):
            parts.append(
                f'<line x1="0" y1="{r * cell}" x2="{width}" y2="{r * cell}" '
                f'stroke="#444444" stroke-width="0.5"/>'
            )
    for mx, mz in spec.marks:
        parts.append(
            f'<circle cx="{_n(mx * cell)}" cy="{_n(mz * cell)}" r="{_n(cell * 0.4)}" '
            f'fill="none" stroke="#00ccff" stroke-width="2"/>'
        )
    if spec.outline:
        parts.append(
            f'<rect x="0" y="0" width="{width}" height="{height}" '
            f'fill="none" stroke="#888888" stroke-width="1"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _heatmap_pgm(counts: np.ndarray) -> bytes:
    nrows, ncols = counts.shape
    scale = _intensity(counts)
    pixels = np.round(scale * 255.0).astype(np.uint8)
    header = f"P5\n{ncols} {nrows}\n255\n".encode("ascii")
    return header + pixels.tobytes()


# ---------------------------------------------------------------------------
# quiver
# ---------------------------------------------------------------------------


def render_quiver(
    field: QuiverField,
    spec: RenderSpec = RenderSpec(),
    underlay: "OccupancyGrid | np.ndarray | None" = None,
):
    """Mean view-direction arrows, optionally over an occupancy underlay."""
    if spec.format == "csv":
        return exports.quiver_to_csv(field)
    if spec.format != "svg":
        raise ValueError(f"unsupported format: {spec.format!r}")

    counts = field.counts if underlay is None else _counts_of(underlay)
    nrows, ncols = field.magnitude.shape
    if counts.shape != (nrows, ncols):
        raise ValueError(
            f"underlay shape {counts.shape} does not match field {(nrows, ncols)}"
        )

    cell = spec.cell_px
    width, height = ncols * cell, nrows * cell
    scale = _intensity(counts)
    arrow_color = "#ffffff" if spec.ramp == "heat" else "#000000"
    parts = [_svg_open(width, height)]
    parts.append(
        f'<rect x="0" y="0" width="{width}" height="{height}" '
        f'fill="{_ramp_color(spec.ramp, 0.0)}"/>'
    )
    for r in range(nrows):
        for c in range(ncols):
            if counts[r, c] > 0:
                parts.append(
                    f'<rect x="{c * cell}" y="{r * cell}" width="{cell}" '
                    f'height="{cell}" fill="{_ramp_color(spec.ramp, scale[r, c])}"/>'
                )
    for r in range(nrows):
        for c in range(ncols):
            if not field.defined[r, c]:
                continue
            dx = field.direction[r, c, 0]
            dz = field.direction[r, c, 1]
            length = field.magnitude[r, c] * cell * spec.arrow_scale
            cx = (c + 0.5) * cell
            cy = (r + 0.5) * cell
            tx = cx + dx * length
            ty = cy + dz * length
            # arrowhead: two strokes swept back 150 degrees from the shaft
            head = length * 0.45
            ang = math.atan2(dz, dx)
            for sweep in (ang + 2.618, ang - 2.618):
                hx = tx + math.cos(sweep) * head
                hy = ty + math.sin(sweep) * head
                parts.append(
                    f'<line x1="{_n(tx)}" y1="{_n(ty)}" x2="{_n(hx)}" y2="{_n(hy)}" '
                    f'stroke="{arrow_color}" stroke-width="1" class="arrowhead"/>'
                )
            parts.append(
                f'<line x1="{_n(cx)}" y1="{_n(cy)}" x2="{_n(tx)}" y2="{_n(ty)}" '
                f'stroke="{arrow_color}" stroke-width="1" class="arrow"/>'
            )
    if spec.outline:
        parts.append(
            f'<rect x="0" y="0" width="{width}" height="{height}" '
            f'fill="none" stroke="#888888" stroke-width="1"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# histogram
# ---------------------------------------------------------------------------


def render_histogram(
    series: "Histogram | Sequence[Histogram]",
    spec: RenderSpec = RenderSpec(),
    labels: Optional[Sequence[str]] = None,
):
    """Grouped bar chart for one or two aligned histograms."""
    if isinstance(series, (ZoneHistogram, HeightHistogram)):
        series = [series]
    else:
        series = list(series)
    if not series:
        raise ValueError("no histogram series given")
    if len(series) > 2:
        raise ValueError("at most two series can share one chart")
    first = series[0]
    for other in series[1:]:
        if other.bin_width != first.bin_width or other.nbins != first.nbins:
            raise ValueError("histogram series use different binnings")

    if spec.format == "csv":
        return exports.histograms_to_csv(series, labels)
    if spec.format != "svg":
        raise ValueError(f"unsupported format: {spec.format!r}")

    if labels is None:
        labels = [f"s{k + 1}" for k in range(len(series))]
    if len(labels) != len(series):
        raise ValueError("labels must match series count")

    markers = spec.zone_markers
    if markers is None:
        if isinstance(first, ZoneHistogram):
            markers = (INTIMATE_MAX, PERSONAL_MAX, SOCIAL_MAX)
        else:
            markers = ()

    width, height = spec.chart_width, spec.chart_height
    left, right, top, bottom = 46, 12, 14, 34
    plot_w = width - left - right
    plot_h = height - top - bottom
    nbins = first.nbins
    range_max = first.range_max

    ymax = max(float(h.probabilities.max()) for h in series)
    if ymax <= 0:
        ymax = 1.0

    parts = [_svg_open(width, height)]
    parts.append(f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>')

    slot = plot_w / nbins
    bar_w = slot * 0.8 / len(series)
    for s_idx, hist in enumerate(series):
        color = _SERIES_COLORS[s_idx]
        for b in range(nbins):
            value = float(hist.probabilities[b])
            if value <= 0:
                continue
            bar_h = plot_h * value / ymax
            x = left + b * slot + slot * 0.1 + s_idx * bar_w
            y = top + plot_h - bar_h
            parts.append(
                f'<rect x="{_n(x)}" y="{_n(y)}" width="{_n(bar_w)}" '
                f'height="{_n(bar_h)}" fill="{color}" class="bar-{labels[s_idx]}"/>'
            )

    # axes
    parts.append(
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" '
        f'y2="{top + plot_h}" stroke="#000000" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" '
        f'stroke="#000000" stroke-width="1"/>'
    )
    # x ticks every whole unit
    unit = 0
    while unit <= range_max:
        x = left + plot_w * unit / range_max
        parts.append(
            f'<line x1="{_n(x)}" y1="{top + plot_h}" x2="{_n(x)}" '
            f'y2="{top + plot_h + 4}" stroke="#000000" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_n(x)}" y="{top + plot_h + 16}" font-family="monospace" '
            f'font-size="10" text-anchor="middle">{unit:g}</text>'
        )
        unit += 1
    # y extremes
    parts.append(
        f'<text x="{left - 4}" y="{top + plot_h}" font-family="monospace" '
        f'font-size="10" text-anchor="end">0</text>'
    )
    parts.append(
        f'<text x="{left - 4}" y="{top + 8}" font-family="monospace" '
        f'font-size="10" text-anchor="end">{ymax:.3g}</text>'
    )
    for marker in markers:
        if not (0 <= marker <= range_max):
            continue
        x = left + plot_w * marker / range_max
        parts.append(
            f'<line x1="{_n(x)}" y1="{top}" x2="{_n(x)}" y2="{top + plot_h}" '
            f'stroke="#777777" stroke-width="1" stroke-dasharray="4,3" '
            f'class="zone-marker"/>'
        )
        parts.append(
            f'<text x="{_n(x + 2)}" y="{top + 10}" font-family="monospace" '
            f'font-size="9" fill="#555555">{marker:g}</text>'
        )
    for s_idx, label in enumerate(labels):
        lx = left + plot_w - 110.0
        ly = top + 8 + s_idx * 14
        parts.append(
            f'<rect x="{_n(lx)}" y="{ly}" width="10" height="10" '
            f'fill="{_SERIES_COLORS[s_idx]}"/>'
        )
        parts.append(
            f'<text x="{_n(lx + 14)}" y="{ly + 9}" font-family="monospace" '
            f'font-size="10">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
