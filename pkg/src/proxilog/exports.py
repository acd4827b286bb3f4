"""CSV writers and readers for engine products.

Floats are written with Python's shortest round-trip repr, so reading a CSV
back reproduces the exact values. Grid CSVs store every cell (dimensions are
recoverable); quiver CSVs store only defined cells and borrow dimensions
from their paired grid.
"""

from __future__ import annotations

import csv
import io
import math
from typing import Iterable, Optional, Sequence, TextIO, Union

import numpy as np

from .engine import (
    FrameClusters,
    HeightHistogram,
    NNSample,
    OccupancyGrid,
    PairwiseMatrices,
    QuiverField,
    ZoneHistogram,
)
from .resample import FrameStore

__all__ = [
    "clusters_to_csv",
    "frames_to_csv",
    "grid_to_csv",
    "histograms_to_csv",
    "nn_to_csv",
    "pairwise_to_csv",
    "quiver_to_csv",
    "read_grid_csv",
    "read_histograms_csv",
    "read_quiver_csv",
]

Histogram = Union[ZoneHistogram, HeightHistogram]


def _fmt(value: float) -> str:
    # repr round-trips doubles exactly; NaN spells as plain "nan"
    if math.isnan(value):
        return "nan"
    return repr(float(value))


def _write_rows(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# writers
# ---------------------------------------------------------------------------


def pairwise_to_csv(frames: Iterable[PairwiseMatrices]) -> str:
    """Long-form pairwise matrices: one row per ordered pair, i != j."""
    def rows():
        for mats in frames:
            users = mats.users
            for a in range(len(users)):
                for b in range(len(users)):
                    if a == b:
                        continue
                    yield (
                        mats.frame,
                        users[a],
                        users[b],
                        _fmt(mats.distance[a, b]),
                        _fmt(mats.angle[a, b]),
                    )

    return _write_rows(("frame", "i", "j", "distance", "angle"), rows())


def nn_to_csv(samples: Iterable[NNSample]) -> str:
    rows = ((s.frame, s.user_id, _fmt(s.distance)) for s in samples)
    return _write_rows(("frame", "user_id", "distance"), rows)


def histograms_to_csv(
    series: Sequence[Histogram], labels: Optional[Sequence[str]] = None
) -> str:
    """One or two aligned histograms, side by side per bin."""
    if not series:
        raise ValueError("no histogram series given")
    first = series[0]
    for other in series[1:]:
        if other.bin_width != first.bin_width or other.nbins != first.nbins:
            raise ValueError("histogram series use different binnings")
    if labels is None:
        labels = [f"s{k + 1}" for k in range(len(series))]
    if len(labels) != len(series):
        raise ValueError("labels must match series count")

    if len(series) == 1:
        header = ["bin_lo", "bin_hi", "count", "probability"]
    else:
        header = ["bin_lo", "bin_hi"]
        for label in labels:
            header += [f"count_{label}", f"probability_{label}"]

    def rows():
        for index in range(first.nbins):
            lo, hi = first.bin_edges(index)
            row = [_fmt(lo), _fmt(hi)]
            for hist in series:
                row += [int(hist.counts[index]), _fmt(hist.probabilities[index])]
            yield row

    return _write_rows(header, rows())


def grid_to_csv(grid: "OccupancyGrid | np.ndarray") -> str:
    """Every cell as (row, col, count); dims recoverable as max index + 1."""
    counts = grid.counts if isinstance(grid, OccupancyGrid) else np.asarray(grid)
    nrows, ncols = counts.shape

    def rows():
        for r in range(nrows):
            for c in range(ncols):
                yield (r, c, int(counts[r, c]))

    return _write_rows(("row", "col", "count"), rows())


def quiver_to_csv(field: QuiverField) -> str:
    """Defined cells only: (row, col, dx, dz, magnitude)."""
    nrows, ncols = field.magnitude.shape

    def rows():
        for r in range(nrows):
            for c in range(ncols):
                if field.defined[r, c]:
                    yield (
                        r,
                        c,
                        _fmt(field.direction[r, c, 0]),
                        _fmt(field.direction[r, c, 1]),
                        _fmt(field.magnitude[r, c]),
                    )

    return _write_rows(("row", "col", "dx", "dz", "magnitude"), rows())


def clusters_to_csv(timeline: Iterable[FrameClusters]) -> str:
    """One row per user per frame; noise carries cluster_id -1."""
    def rows():
        for fc in timeline:
            for cluster_id, members in enumerate(fc.clusters):
                for user in members:
                    yield (fc.frame, cluster_id, user)
            for user in fc.noise:
                yield (fc.frame, -1, user)

    return _write_rows(("frame", "cluster_id", "user_id"), rows())


def frames_to_csv(store: FrameStore) -> str:
    """Resampled poses, one row per user per frame."""
    def rows():
        for index, poses in store.iter_frames():
            for uid in sorted(poses):
                pose = poses[uid]
                yield (
                    index,
                    uid,
                    _fmt(pose.position[0]),
                    _fmt(pose.position[1]),
                    _fmt(pose.position[2]),
                    _fmt(pose.direction[0]),
                    _fmt(pose.direction[1]),
                    _fmt(pose.direction[2]),
                    pose.source_ts,
                )

    return _write_rows(
        ("frame", "user_id", "x", "y", "z", "dx", "dy", "dz", "source_ts"), rows()
    )


# ---------------------------------------------------------------------------
# readers (enough to feed the render CLI from files)
# ---------------------------------------------------------------------------


def _read_csv(source: "str | TextIO") -> list[dict[str, str]]:
    if hasattr(source, "read"):
        return list(csv.DictReader(source))
    with open(source, "r", encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def read_grid_csv(source: "str | TextIO") -> np.ndarray:
    """Counts array from a grid CSV (expects every cell present)."""
    records = _read_csv(source)
    if not records:
        raise ValueError("grid CSV has no rows")
    nrows = max(int(rec["row"]) for rec in records) + 1
    ncols = max(int(rec["col"]) for rec in records) + 1
    counts = np.zeros((nrows, ncols), dtype=np.int64)
    for rec in records:
        counts[int(rec["row"]), int(rec["col"])] = int(rec["count"])
    return counts


def read_quiver_csv(
    source: "str | TextIO", shape: tuple[int, int]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(direction, magnitude, defined) arrays from a quiver CSV."""
    records = _read_csv(source)
    nrows, ncols = shape
    direction = np.zeros((nrows, ncols, 2), dtype=np.float64)
    magnitude = np.zeros((nrows, ncols), dtype=np.float64)
    defined = np.zeros((nrows, ncols), dtype=bool)
    for rec in records:
        r, c = int(rec["row"]), int(rec["col"])
        if not (0 <= r < nrows and 0 <= c < ncols):
            raise ValueError(f"quiver cell ({r}, {c}) outside grid {shape}")
        direction[r, c, 0] = float(rec["dx"])
        direction[r, c, 1] = float(rec["dz"])
        magnitude[r, c] = float(rec["magnitude"])
        defined[r, c] = True
    return direction, magnitude, defined


def read_histograms_csv(source: "str | TextIO") -> list[tuple[str, ZoneHistogram]]:
    """Labelled histograms back from a histogram CSV.

    Returns ZoneHistogram containers regardless of the original kind; the
    binning travels in the file.
    """
    records = _read_csv(source)
    if not records:
        raise ValueError("histogram CSV has no rows")
    field_names = list(records[0].keys())
    labels: list[str] = []
    if "count" in field_names:
        labels.append("")
    for name in field_names:
        if name.startswith("count_"):
            labels.append(name[len("count_"):])
    if not labels:
        raise ValueError("histogram CSV has no count columns")

    lows = [float(rec["bin_lo"]) for rec in records]
    highs = [float(rec["bin_hi"]) for rec in records]
    bin_width = highs[0] - lows[0]
    range_max = highs[-1]

    out: list[tuple[str, ZoneHistogram]] = []
    for label in labels:
        suffix = f"_{label}" if label else ""
        counts = np.array([int(rec[f"count{suffix}"]) for rec in records], dtype=np.int64)
        probs = np.array(
            [float(rec[f"probability{suffix}"]) for rec in records], dtype=np.float64
        )
        out.append(
            (
                label,
                ZoneHistogram(
                    bin_width=bin_width,
                    range_max=range_max,
                    counts=counts,
                    probabilities=probs,
                    total=int(counts.sum()),
                ),
            )
        )
    return out
