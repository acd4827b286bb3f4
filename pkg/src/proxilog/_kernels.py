"""Numeric hot loops, jitted with numba when available.

Set PROXILOG_NO_NUMBA=1 to force the pure-numpy path. Both implementations
stay importable (`*_numpy`, `*_numba`) so tests and the benchmark can compare
them directly. The two variants run the same arithmetic in the same order:
grid outputs and distances agree bitwise; angles can differ by a couple of
ulp because the two backends link different arccos implementations.

All kernels assume finite inputs; validation happens upstream.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "HAS_NUMBA",
    "USING_NUMBA",
    "backend_name",
    "grid_counts",
    "grid_direction_sums",
    "pairwise_dist_angle",
    "grid_counts_numpy",
    "grid_direction_sums_numpy",
    "pairwise_numpy",
]

_FORCE_NUMPY = os.environ.get("PROXILOG_NO_NUMBA", "") not in ("", "0")

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dep, but stay usable
    HAS_NUMBA = False


# ---------------------------------------------------------------------------
# pure numpy implementations
# ---------------------------------------------------------------------------


def pairwise_numpy(positions: np.ndarray, directions: np.ndarray):
    """Pairwise distance and ego-bearing angle for one frame.

    positions: (n, 3) float64, directions: (n, 3) float64 unit rows.
    Returns (dist, angle), both (n, n). dist is symmetric with a zero
    diagonal. angle[i, j] is the angle between i's view direction and the
    bearing from i to j, in [0, pi]; NaN on the diagonal and for coincident
    pairs.
    """
    # explicit per-component arithmetic keeps the operation sequence (and
    # therefore every rounding step) identical to the numba loop
    dx = positions[None, :, 0] - positions[:, None, 0]  # [i, j] = p_j - p_i
    dy = positions[None, :, 1] - positions[:, None, 1]
    dz = positions[None, :, 2] - positions[:, None, 2]
    dist = np.sqrt(dx * dx + dy * dy + dz * dz)
    with np.errstate(invalid="ignore", divide="ignore"):
        ux = dx / dist
        uy = dy / dist
        uz = dz / dist
        cos = (
            directions[:, 0, None] * ux
            + directions[:, 1, None] * uy
            + directions[:, 2, None] * uz
        )
    angle = np.arccos(np.clip(cos, -1.0, 1.0))
    angle[dist == 0.0] = np.nan
    return dist, angle


def grid_counts_numpy(
    xs: np.ndarray, zs: np.ndarray, cell: float, nrows: int, ncols: int
):
    """Bin floor positions into a (nrows, ncols) grid; row = z, col = x.

    Out-of-bounds samples are excluded from the cells and tallied in the
    returned clipped total, so cell total + clipped = sample count.
    """
    counts = np.zeros((nrows, ncols), dtype=np.int64)
    if xs.size == 0:
        return counts, 0
    cols = np.floor(xs / cell).astype(np.int64)
    rows = np.floor(zs / cell).astype(np.int64)
    inside = (cols >= 0) & (cols < ncols) & (rows >= 0) & (rows < nrows)
    clipped = int(xs.size - np.count_nonzero(inside))
    np.add.at(counts, (rows[inside], cols[inside]), 1)
    return counts, clipped


def grid_direction_sums_numpy(
    xs: np.ndarray,
    zs: np.ndarray,
    dxs: np.ndarray,
    dzs: np.ndarray,
    cell: float,
    nrows: int,
    ncols: int,
):
    """Per-cell sample counts plus summed horizontal view components."""
    counts = np.zeros((nrows, ncols), dtype=np.int64)
    sum_dx = np.zeros((nrows, ncols), dtype=np.float64)
    sum_dz = np.zeros((nrows, ncols), dtype=np.float64)
    if xs.size == 0:
        return counts, sum_dx, sum_dz, 0
    cols = np.floor(xs / cell).astype(np.int64)
    rows = np.floor(zs / cell).astype(np.int64)
    inside = (cols >= 0) & (cols < ncols) & (rows >= 0) & (rows < nrows)
    clipped = int(xs.size - np.count_nonzero(inside))
    rows, cols = rows[inside], cols[inside]
    np.add.at(counts, (rows, cols), 1)
    np.add.at(sum_dx, (rows, cols), dxs[inside])
    np.add.at(sum_dz, (rows, cols), dzs[inside])
    return counts, sum_dx, sum_dz, clipped


# ---------------------------------------------------------------------------
# numba implementations (same arithmetic, same order)
# ---------------------------------------------------------------------------

if HAS_NUMBA:

    @njit(cache=True)
    def pairwise_numba(positions, directions):  # pragma: no cover - jitted
        n = positions.shape[0]
        dist = np.zeros((n, n), dtype=np.float64)
        angle = np.full((n, n), np.nan, dtype=np.float64)
        for i in range(n):
            for j in range(i + 1, n):
                dx = positions[j, 0] - positions[i, 0]
                dy = positions[j, 1] - positions[i, 1]
                dz = positions[j, 2] - positions[i, 2]
                d = np.sqrt(dx * dx + dy * dy + dz * dz)
                dist[i, j] = d
                dist[j, i] = d
                if d > 0.0:
                    ux = dx / d
                    uy = dy / d
                    uz = dz / d
                    ci = directions[i, 0] * ux + directions[i, 1] * uy + directions[i, 2] * uz
                    cj = directions[j, 0] * -ux + directions[j, 1] * -uy + directions[j, 2] * -uz
                    if ci > 1.0:
                        ci = 1.0
                    elif ci < -1.0:
                        ci = -1.0
                    if cj > 1.0:
                        cj = 1.0
                    elif cj < -1.0:
                        cj = -1.0
                    angle[i, j] = np.arccos(ci)
                    angle[j, i] = np.arccos(cj)
        return dist, angle

    @njit(cache=True)
    def grid_counts_numba(xs, zs, cell, nrows, ncols):  # pragma: no cover
        counts = np.zeros((nrows, ncols), dtype=np.int64)
        clipped = 0
        for k in range(xs.shape[0]):
            col = int(np.floor(xs[k] / cell))
            row = int(np.floor(zs[k] / cell))
            if col < 0 or col >= ncols or row < 0 or row >= nrows:
                clipped += 1
                continue
            counts[row, col] += 1
        return counts, clipped

    @njit(cache=True)
    def grid_direction_sums_numba(xs, zs, dxs, dzs, cell, nrows, ncols):  # pragma: no cover
        counts = np.zeros((nrows, ncols), dtype=np.int64)
        sum_dx = np.zeros((nrows, ncols), dtype=np.float64)
        sum_dz = np.zeros((nrows, ncols), dtype=np.float64)
        clipped = 0
        for k in range(xs.shape[0]):
            col = int(np.floor(xs[k] / cell))
            row = int(np.floor(zs[k] / cell))
            if col < 0 or col >= ncols or row < 0 or row >= nrows:
                clipped += 1
                continue
            counts[row, col] += 1
            sum_dx[row, col] += dxs[k]
            sum_dz[row, col] += dzs[k]
        return counts, sum_dx, sum_dz, clipped


USING_NUMBA = HAS_NUMBA and not _FORCE_NUMPY

if USING_NUMBA:
    pairwise_dist_angle = pairwise_numba
    grid_counts = grid_counts_numba
    grid_direction_sums = grid_direction_sums_numba
else:
    pairwise_dist_angle = pairwise_numpy
    grid_counts = grid_counts_numpy
    grid_direction_sums = grid_direction_sums_numpy


def backend_name() -> str:
    return "numba" if USING_NUMBA else "numpy"
