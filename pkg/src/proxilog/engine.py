"""Proxemic metrics over resampled frames.

Distances are 3D euclidean in metres. Heights read the y component. The
floor plane is (x, z); occupancy grids index rows by z and columns by x.
"""

from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Mapping, Optional, Sequence

import numpy as np

from . import _kernels
from .model import RoomGeometry
from .resample import FrameStore, Pose

__all__ = [
    "INTIMATE_MAX",
    "PERSONAL_MAX",
    "SOCIAL_MAX",
    "ExtentBox",
    "FrameClusters",
    "HeightHistogram",
    "NNSample",
    "OccupancyGrid",
    "PairwiseMatrices",
    "ProxemicZone",
    "QuiverField",
    "ZoneHistogram",
    "classify_zone",
    "detect_groups",
    "fov_containment",
    "group_timeline",
    "height_histogram",
    "intimate_collision_rate",
    "modal_cluster_count",
    "nearest_neighbour_series",
    "occupancy",
    "occupied_extent",
    "pairwise",
    "pairwise_frames",
    "quiver",
    "zone_histogram",
]

# Zone boundaries in metres. Intervals are half-open: a distance equal to a
# boundary belongs to the zone above it.
INTIMATE_MAX = 0.45
PERSONAL_MAX = 1.2
SOCIAL_MAX = 3.6

DEFAULT_ZONE_BIN_WIDTH = 0.25
DEFAULT_ZONE_RANGE_MAX = 6.0
DEFAULT_HEIGHT_BIN_WIDTH = 0.5
DEFAULT_HEIGHT_RANGE_MAX = 7.0
DEFAULT_GROUP_EPS = 1.2
DEFAULT_GROUP_MIN_SIZE = 2
DEFAULT_FOV_HALF_ANGLE = math.pi / 4
DEFAULT_QUIVER_MIN_MAGNITUDE = 1e-3


class ProxemicZone(Enum):
    INTIMATE = "intimate"
    PERSONAL = "personal"
    SOCIAL = "social"
    PUBLIC = "public"


def classify_zone(
    distance: float,
    boundaries: Sequence[float] = (INTIMATE_MAX, PERSONAL_MAX, SOCIAL_MAX),
) -> ProxemicZone:
    """Map an interpersonal distance to its proxemic zone."""
    if not (distance >= 0):
        raise ValueError(f"distance must be non-negative, got {distance!r}")
    intimate, personal, social = boundaries
    if distance < intimate:
        return ProxemicZone.INTIMATE
    if distance < personal:
        return ProxemicZone.PERSONAL
    if distance < social:
        return ProxemicZone.SOCIAL
    return ProxemicZone.PUBLIC


# ---------------------------------------------------------------------------
# pairwise frame matrices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairwiseMatrices:
    """Distance and angle matrices for one frame.

    Row/column order follows `users`. distance is symmetric with a zero
    diagonal. angle[i, j] is the angle between user i's view direction and
    the bearing from i to j (radians, [0, pi]); NaN on the diagonal and for
    coincident positions.
    """

    frame: int
    users: tuple[str, ...]
    distance: np.ndarray
    angle: np.ndarray


def _poses_to_arrays(poses: Mapping[str, Pose]):
    users = tuple(sorted(poses))
    positions = np.array([poses[u].position for u in users], dtype=np.float64)
    directions = np.array([poses[u].direction for u in users], dtype=np.float64)
    if positions.size == 0:
        positions = positions.reshape(0, 3)
        directions = directions.reshape(0, 3)
    return users, positions, directions


def pairwise(poses: Mapping[str, Pose], frame: int = -1) -> PairwiseMatrices:
    """Pairwise matrices for one frame of poses (keyed by user id)."""
    users, positions, directions = _poses_to_arrays(poses)
    dist, angle = _kernels.pairwise_dist_angle(positions, directions)
    return PairwiseMatrices(frame=frame, users=users, distance=dist, angle=angle)


def pairwise_frames(store: FrameStore) -> Iterator[PairwiseMatrices]:
    """Pairwise matrices for every frame in index order."""
    for index, poses in store.iter_frames():
        yield pairwise(poses, frame=index)


# ---------------------------------------------------------------------------
# nearest neighbours and histograms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NNSample:
    """Nearest-neighbour distance for one user in one frame."""

    frame: int
    user_id: str
    distance: float


def nearest_neighbour_series(store: FrameStore) -> list[NNSample]:
    """Per-user nearest-neighbour distance per frame.

    Frames with fewer than two users contribute nothing.
    """
    samples: list[NNSample] = []
    for index, poses in store.iter_frames():
        if len(poses) < 2:
            continue
        mats = pairwise(poses, frame=index)
        dist = mats.distance.copy()
        np.fill_diagonal(dist, np.inf)
        nearest = dist.min(axis=1)
        for user, value in zip(mats.users, nearest):
            samples.append(NNSample(frame=index, user_id=user, distance=float(value)))
    return samples


def _bin_values(
    values: np.ndarray, bin_width: float, range_max: float, clip_low: bool
) -> np.ndarray:
    nbins = int(round(range_max / bin_width))
    idx = np.floor(values / bin_width).astype(np.int64)
    if clip_low:
        idx[idx < 0] = 0
    idx[idx >= nbins] = nbins - 1
    counts = np.zeros(nbins, dtype=np.int64)
    np.add.at(counts, idx, 1)
    return counts


@dataclass
class ZoneHistogram:
    """Distance histogram over [0, range_max) with fixed-width bins.

    Out-of-range samples clip into the last bin. probabilities normalise
    counts when total > 0; histograms built via from_values carry
    pre-normalised values and a zero total.
    """

    bin_width: float
    range_max: float
    counts: np.ndarray
    probabilities: np.ndarray
    total: int

    @property
    def nbins(self) -> int:
        return len(self.counts)

    @property
    def empty(self) -> bool:
        return self.total == 0 and not self.probabilities.any()

    def bin_edges(self, index: int) -> tuple[float, float]:
        return (index * self.bin_width, (index + 1) * self.bin_width)

    @classmethod
    def from_values(
        cls,
        values: Sequence[float],
        bin_width: float = DEFAULT_ZONE_BIN_WIDTH,
        range_max: float = DEFAULT_ZONE_RANGE_MAX,
    ) -> "ZoneHistogram":
        """Wrap pre-normalised bin values (probabilities or densities)."""
        values = np.asarray(values, dtype=np.float64)
        nbins = int(round(range_max / bin_width))
        if len(values) != nbins:
            raise ValueError(f"expected {nbins} values, got {len(values)}")
        return cls(
            bin_width=bin_width,
            range_max=range_max,
            counts=np.zeros(nbins, dtype=np.int64),
            probabilities=values,
            total=0,
        )


@dataclass
class HeightHistogram:
    """Height (y) histogram over [0, range_max); clips at both ends."""

    bin_width: float
    range_max: float
    counts: np.ndarray
    probabilities: np.ndarray
    total: int

    @property
    def nbins(self) -> int:
        return len(self.counts)

    @property
    def empty(self) -> bool:
        return self.total == 0

    def bin_edges(self, index: int) -> tuple[float, float]:
        return (index * self.bin_width, (index + 1) * self.bin_width)

    @classmethod
    def from_values(
        cls,
        values: Sequence[float],
        bin_width: float = DEFAULT_HEIGHT_BIN_WIDTH,
        range_max: float = DEFAULT_HEIGHT_RANGE_MAX,
    ) -> "HeightHistogram":
        """Wrap pre-normalised bin values (probabilities or densities)."""
        values = np.asarray(values, dtype=np.float64)
        nbins = int(round(range_max / bin_width))
        if len(values) != nbins:
            raise ValueError(f"expected {nbins} values, got {len(values)}")
        return cls(
            bin_width=bin_width,
            range_max=range_max,
            counts=np.zeros(nbins, dtype=np.int64),
            probabilities=values,
            total=0,
        )


def zone_histogram(
    samples: "Iterable[float] | Iterable[NNSample]",
    bin_width: float = DEFAULT_ZONE_BIN_WIDTH,
    range_max: float = DEFAULT_ZONE_RANGE_MAX,
) -> ZoneHistogram:
    """Histogram nearest-neighbour distances into fixed-width bins.

    Accepts raw floats or NNSample records. Negative samples raise.
    """
    values = np.array(
        [s.distance if isinstance(s, NNSample) else float(s) for s in samples],
        dtype=np.float64,
    )
    nbins = int(round(range_max / bin_width))
    if values.size and values.min() < 0:
        raise ValueError("distance samples must be non-negative")
    if values.size == 0:
        counts = np.zeros(nbins, dtype=np.int64)
        probs = np.zeros(nbins, dtype=np.float64)
        return ZoneHistogram(bin_width, range_max, counts, probs, 0)
    counts = _bin_values(values, bin_width, range_max, clip_low=False)
    probs = counts / counts.sum()
    return ZoneHistogram(bin_width, range_max, counts, probs, int(counts.sum()))


def height_histogram(
    store: FrameStore,
    bin_width: float = DEFAULT_HEIGHT_BIN_WIDTH,
    range_max: float = DEFAULT_HEIGHT_RANGE_MAX,
) -> HeightHistogram:
    """Histogram pose heights (y). Values below 0 clip into the first bin."""
    heights = np.array(
        [pose.position[1] for _, poses in store.iter_frames() for pose in poses.values()],
        dtype=np.float64,
    )
    nbins = int(round(range_max / bin_width))
    if heights.size == 0:
        counts = np.zeros(nbins, dtype=np.int64)
        return HeightHistogram(bin_width, range_max, counts, counts.astype(np.float64), 0)
    counts = _bin_values(heights, bin_width, range_max, clip_low=True)
    probs = counts / counts.sum()
    return HeightHistogram(bin_width, range_max, counts, probs, int(counts.sum()))


def intimate_collision_rate(
    samples: "Iterable[float] | Iterable[NNSample]",
    bound: float = INTIMATE_MAX,
) -> float:
    """Fraction of nearest-neighbour samples inside the intimate zone."""
    values = [s.distance if isinstance(s, NNSample) else float(s) for s in samples]
    if not values:
        raise ValueError("collision rate undefined for an empty sample set")
    inside = sum(1 for v in values if v < bound)
    return inside / len(values)


# ---------------------------------------------------------------------------
# floor grids
# ---------------------------------------------------------------------------


@dataclass
class OccupancyGrid:
    """Pose counts per floor cell. rows index z, columns index x."""

    room: RoomGeometry
    cell_size: float
    counts: np.ndarray
    clipped: int

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass
class QuiverField:
    """Mean horizontal view direction per floor cell.

    direction holds unit (dx, dz) rows where defined; magnitude is the norm
    of the mean horizontal projection before renormalising. Cells with no
    samples or a mean magnitude below the threshold are undefined.
    """

    room: RoomGeometry
    cell_size: float
    counts: np.ndarray
    direction: np.ndarray
    magnitude: np.ndarray
    defined: np.ndarray


def _grid_shape(room: RoomGeometry, cell_size: float) -> tuple[int, int]:
    if cell_size <= 0:
        raise ValueError("cell_size must be positive")
    nrows = max(1, int(math.ceil(room.bounds_z / cell_size)))
    ncols = max(1, int(math.ceil(room.bounds_x / cell_size)))
    return nrows, ncols


def _floor_arrays(store: FrameStore):
    xs, zs, dxs, dzs = [], [], [], []
    for _, poses in store.iter_frames():
        for pose in poses.values():
            xs.append(pose.position[0])
            zs.append(pose.position[2])
            dxs.append(pose.direction[0])
            dzs.append(pose.direction[2])
    return (
        np.array(xs, dtype=np.float64),
        np.array(zs, dtype=np.float64),
        np.array(dxs, dtype=np.float64),
        np.array(dzs, dtype=np.float64),
    )


def occupancy(
    store: FrameStore, room: RoomGeometry, cell_size: float = 1.0
) -> OccupancyGrid:
    """Accumulate pose counts on the floor grid.

    Poses outside the room bounds are left out of the cells and tallied in
    `clipped`, so grid total + clipped always equals the pose count.
    """
    nrows, ncols = _grid_shape(room, cell_size)
    xs, zs, _, _ = _floor_arrays(store)
    counts, clipped = _kernels.grid_counts(xs, zs, float(cell_size), nrows, ncols)
    return OccupancyGrid(room=room, cell_size=cell_size, counts=counts, clipped=clipped)


def quiver(
    store: FrameStore,
    room: RoomGeometry,
    cell_size: float = 1.0,
    min_magnitude: float = DEFAULT_QUIVER_MIN_MAGNITUDE,
) -> QuiverField:
    """Mean horizontal view direction per cell.

    The mean is taken over raw (dx, dz) projections; near-cancelling cells
    (magnitude below min_magnitude) are undefined rather than amplified.
    """
    nrows, ncols = _grid_shape(room, cell_size)
    xs, zs, dxs, dzs = _floor_arrays(store)
    counts, sum_dx, sum_dz, _ = _kernels.grid_direction_sums(
        xs, zs, dxs, dzs, float(cell_size), nrows, ncols
    )
    direction = np.zeros((nrows, ncols, 2), dtype=np.float64)
    occupied = counts > 0
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_dx = np.where(occupied, sum_dx / counts, 0.0)
        mean_dz = np.where(occupied, sum_dz / counts, 0.0)
    magnitude = np.hypot(mean_dx, mean_dz)
    defined = occupied & (magnitude >= min_magnitude)
    with np.errstate(invalid="ignore", divide="ignore"):
        direction[:, :, 0] = np.where(defined, mean_dx / magnitude, 0.0)
        direction[:, :, 1] = np.where(defined, mean_dz / magnitude, 0.0)
    magnitude = np.where(defined, magnitude, 0.0)
    return QuiverField(
        room=room,
        cell_size=cell_size,
        counts=counts,
        direction=direction,
        magnitude=magnitude,
        defined=defined,
    )


# ---------------------------------------------------------------------------
# attention and extent
# ---------------------------------------------------------------------------


def fov_containment(
    store: FrameStore,
    target: Sequence[float],
    half_angle: float = DEFAULT_FOV_HALF_ANGLE,
) -> float:
    """Fraction of poses whose horizontal view cone contains a floor target.

    target is (x, z), or (x, y, z) of which y is ignored. The angle is
    measured in the floor plane between the pose's horizontal view direction
    and the bearing to the target. Poses standing at the target, or looking
    straight up or down, carry no horizontal bearing and are skipped. Raises
    ValueError when no usable sample remains.
    """
    if not (0 <= half_angle <= math.pi):
        raise ValueError("half_angle must be within [0, pi]")
    if len(target) == 3:
        tx, tz = float(target[0]), float(target[2])
    elif len(target) == 2:
        tx, tz = float(target[0]), float(target[1])
    else:
        raise ValueError("target must be (x, z) or (x, y, z)")

    cos_half = math.cos(half_angle)
    usable = 0
    inside = 0
    for _, poses in store.iter_frames():
        for pose in poses.values():
            bx = tx - pose.position[0]
            bz = tz - pose.position[2]
            bnorm = math.hypot(bx, bz)
            dnorm = math.hypot(pose.direction[0], pose.direction[2])
            if bnorm == 0.0 or dnorm == 0.0:
                continue
            cos = (pose.direction[0] * bx + pose.direction[2] * bz) / (bnorm * dnorm)
            usable += 1
            if cos >= cos_half:
                inside += 1
    if usable == 0:
        raise ValueError("no usable samples for FOV containment")
    return inside / usable


@dataclass(frozen=True)
class ExtentBox:
    """Central-quantile bounding box of floor positions."""

    x_lo: float
    x_hi: float
    z_lo: float
    z_hi: float
    quantile: float

    @property
    def width(self) -> float:
        return self.x_hi - self.x_lo

    @property
    def depth(self) -> float:
        return self.z_hi - self.z_lo


def occupied_extent(store: FrameStore, quantile: float = 0.95) -> ExtentBox:
    """Per-axis central-quantile box of floor positions.

    quantile q keeps the central q mass per axis: the box spans the
    (1-q)/2 .. (1+q)/2 quantiles of x and of z (linear interpolation).
    """
    if not (0 < quantile <= 1):
        raise ValueError("quantile must be in (0, 1]")
    xs, zs, _, _ = _floor_arrays(store)
    if xs.size == 0:
        raise ValueError("extent undefined for an empty store")
    lo_q = (1.0 - quantile) / 2.0
    hi_q = (1.0 + quantile) / 2.0
    x_lo, x_hi = np.quantile(xs, [lo_q, hi_q])
    z_lo, z_hi = np.quantile(zs, [lo_q, hi_q])
    return ExtentBox(
        x_lo=float(x_lo),
        x_hi=float(x_hi),
        z_lo=float(z_lo),
        z_hi=float(z_hi),
        quantile=quantile,
    )


# ---------------------------------------------------------------------------
# group detection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FrameClusters:
    """Cluster partition of one frame's users."""

    frame: int
    clusters: tuple[tuple[str, ...], ...]
    noise: tuple[str, ...]


def detect_groups(
    poses: Mapping[str, Pose],
    eps: float = DEFAULT_GROUP_EPS,
    min_size: int = DEFAULT_GROUP_MIN_SIZE,
) -> tuple[list[list[str]], list[str]]:
    """Density-connected grouping of one frame (hand-rolled DBSCAN).

    A pose is a core point when at least min_size poses (itself included)
    sit within eps of it. Clusters grow from core points; non-core poses
    within eps of a core join that core's cluster; the rest are noise.
    Deterministic: users are processed in sorted id order. With the default
    min_size of 2 this reduces to eps-connected components.

    Returns (clusters, noise); every user appears exactly once.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if min_size < 1:
        raise ValueError("min_size must be at least 1")
    users, positions, _ = _poses_to_arrays(poses)
    n = len(users)
    if n == 0:
        return [], []
    diff = positions[None, :, :] - positions[:, None, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    within = dist <= eps
    np.fill_diagonal(within, False)
    neighbour_counts = within.sum(axis=1)
    is_core = neighbour_counts >= (min_size - 1)

    labels = np.full(n, -1, dtype=np.int64)
    next_label = 0
    for start in range(n):
        if labels[start] != -1 or not is_core[start]:
            continue
        label = next_label
        next_label += 1
        labels[start] = label
        queue = deque([start])
        while queue:
            node = queue.popleft()
            if not is_core[node]:
                continue
            for other in np.flatnonzero(within[node]):
                if labels[other] == -1:
                    labels[other] = label
                    queue.append(int(other))

    clusters: list[list[str]] = [[] for _ in range(next_label)]
    noise: list[str] = []
    for i, user in enumerate(users):
        if labels[i] == -1:
            noise.append(user)
        else:
            clusters[labels[i]].append(user)
    return clusters, noise


def group_timeline(
    store: FrameStore,
    eps: float = DEFAULT_GROUP_EPS,
    min_size: int = DEFAULT_GROUP_MIN_SIZE,
) -> list[FrameClusters]:
    """detect_groups applied to every frame, in index order."""
    timeline: list[FrameClusters] = []
    for index, poses in store.iter_frames():
        clusters, noise = detect_groups(poses, eps=eps, min_size=min_size)
        timeline.append(
            FrameClusters(
                frame=index,
                clusters=tuple(tuple(c) for c in clusters),
                noise=tuple(noise),
            )
        )
    return timeline


def modal_cluster_count(timeline: Iterable[FrameClusters]) -> int:
    """Most common per-frame cluster count; ties break toward the smaller."""
    tally = Counter(len(fc.clusters) for fc in timeline)
    if not tally:
        raise ValueError("modal cluster count undefined for an empty timeline")
    best = max(tally.values())
    return min(count for count, freq in tally.items() if freq == best)
