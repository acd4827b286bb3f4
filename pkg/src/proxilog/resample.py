"""Decimating resampler: raw tick streams to fixed-rate frames.

Frames are numbered from an origin equal to the earliest tick's timestamp
floored to a whole UTC minute. Frame i covers [origin + i*p, origin + (i+1)*p)
where p is the frame period. Within a bin the last tick wins (latest
timestamp; ties resolved in favour of the later stream element). Empty bins
stay empty: no interpolation, no fill.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional

from .model import TickEvent

__all__ = [
    "FrameStore",
    "Pose",
    "dataset_summary",
    "frames_per_minute_to_period_ms",
    "resample",
    "resample_by_room",
]

MINUTE_MS = 60_000
DEFAULT_FRAMES_PER_MINUTE = 10


def frames_per_minute_to_period_ms(frames_per_minute: int) -> int:
    """Frame period for an integer frame rate. Must divide one minute evenly."""
    if not isinstance(frames_per_minute, int) or frames_per_minute <= 0:
        raise ValueError("frames_per_minute must be a positive integer")
    if MINUTE_MS % frames_per_minute != 0:
        raise ValueError(
            f"frames_per_minute must divide 60000 ms evenly, got {frames_per_minute}"
        )
    return MINUTE_MS // frames_per_minute


@dataclass(frozen=True)
class Pose:
    """One user's pose in one frame, carried over from the winning tick."""

    user_id: str
    position: tuple[float, float, float]
    direction: tuple[float, float, float]
    orientation: tuple[float, float, float, float]
    source_ts: int


@dataclass
class FrameStore:
    """Resampled frames for a single room.

    frames maps frame index to {user_id: Pose}. Only non-empty frames are
    stored.
    """

    room_id: str
    frame_period_ms: int
    origin_ts: int
    frames: dict[int, dict[str, Pose]] = field(default_factory=dict)
    dropped_before_origin: int = 0

    def frame_indices(self) -> list[int]:
        return sorted(self.frames)

    def user_ids(self) -> list[str]:
        users: set[str] = set()
        for poses in self.frames.values():
            users.update(poses)
        return sorted(users)

    def pose_count(self) -> int:
        return sum(len(poses) for poses in self.frames.values())

    def iter_frames(self) -> Iterator[tuple[int, dict[str, Pose]]]:
        """Frames in index order; poses keyed by user id."""
        for index in sorted(self.frames):
            yield index, self.frames[index]

    def frame_ts(self, index: int) -> int:
        return self.origin_ts + index * self.frame_period_ms

    # -- serialization ------------------------------------------------------

    def to_json(self) -> str:
        """Deterministic JSON: frames by index, poses by user id."""
        frames = []
        for index in sorted(self.frames):
            poses = self.frames[index]
            frames.append(
                {
                    "frame": index,
                    "poses": [
                        {
                            "user_id": uid,
                            "position": list(poses[uid].position),
                            "direction": list(poses[uid].direction),
                            "orientation": list(poses[uid].orientation),
                            "source_ts": poses[uid].source_ts,
                        }
                        for uid in sorted(poses)
                    ],
                }
            )
        doc = {
            "room_id": self.room_id,
            "frame_period_ms": self.frame_period_ms,
            "origin_ts": self.origin_ts,
            "dropped_before_origin": self.dropped_before_origin,
            "frames": frames,
        }
        return json.dumps(doc, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "FrameStore":
        doc = json.loads(text)
        store = cls(
            room_id=doc["room_id"],
            frame_period_ms=doc["frame_period_ms"],
            origin_ts=doc["origin_ts"],
            dropped_before_origin=doc.get("dropped_before_origin", 0),
        )
        for entry in doc["frames"]:
            poses = {}
            for raw in entry["poses"]:
                poses[raw["user_id"]] = Pose(
                    user_id=raw["user_id"],
                    position=tuple(raw["position"]),
                    direction=tuple(raw["direction"]),
                    orientation=tuple(raw["orientation"]),
                    source_ts=raw["source_ts"],
                )
            store.frames[entry["frame"]] = poses
        return store


def _floor_to_minute(ts: int) -> int:
    return (ts // MINUTE_MS) * MINUTE_MS


def _pose_from(event: TickEvent) -> Pose:
    return Pose(
        user_id=event.user_id,
        position=event.position,
        direction=event.direction,
        orientation=event.orientation,
        source_ts=event.ts_utc,
    )


def resample_by_room(
    events: Iterable[TickEvent],
    frames_per_minute: int = DEFAULT_FRAMES_PER_MINUTE,
    origin_ts: Optional[int] = None,
) -> dict[str, FrameStore]:
    """Resample a possibly multi-room stream into one FrameStore per room.

    All stores share one origin (the global earliest tick floored to a whole
    minute, unless passed explicitly) so frame indices line up across rooms.
    The input may arrive in any order and is consumed in one streaming pass.
    """
    period = frames_per_minute_to_period_ms(frames_per_minute)
    if origin_ts is not None and origin_ts % period != 0:
        raise ValueError("origin_ts must be a multiple of the frame period")
    # Keyed by absolute bin (ts // period); converted to origin-relative
    # indices at the end. Valid because the origin is a whole minute and the
    # period divides a minute, so the origin is a multiple of the period.
    winners: dict[str, dict[tuple[str, int], TickEvent]] = {}
    min_ts: Optional[int] = None
    dropped = 0
    for event in events:
        ts = event.ts_utc
        if min_ts is None or ts < min_ts:
            min_ts = ts
        if origin_ts is not None and ts < origin_ts:
            dropped += 1
            continue
        key = (event.user_id, ts // period)
        room_bins = winners.setdefault(event.room_id, {})
        held = room_bins.get(key)
        if held is None or ts >= held.ts_utc:
            room_bins[key] = event

    if origin_ts is None:
        origin = 0 if min_ts is None else _floor_to_minute(min_ts)
    else:
        origin = origin_ts
    origin_bin = origin // period

    stores: dict[str, FrameStore] = {}
    for room_id, room_bins in winners.items():
        store = FrameStore(
            room_id=room_id,
            frame_period_ms=period,
            origin_ts=origin,
            dropped_before_origin=dropped,
        )
        for (user_id, abs_bin), event in room_bins.items():
            index = abs_bin - origin_bin
            store.frames.setdefault(index, {})[user_id] = _pose_from(event)
        stores[room_id] = store
    return stores


def resample(
    events: Iterable[TickEvent],
    frames_per_minute: int = DEFAULT_FRAMES_PER_MINUTE,
    origin_ts: Optional[int] = None,
) -> FrameStore:
    """Resample a single-room stream. Raises ValueError on mixed rooms."""
    stores = resample_by_room(events, frames_per_minute, origin_ts)
    if not stores:
        period = frames_per_minute_to_period_ms(frames_per_minute)
        return FrameStore(room_id="", frame_period_ms=period, origin_ts=origin_ts or 0)
    if len(stores) > 1:
        rooms = ", ".join(sorted(stores))
        raise ValueError(f"stream spans multiple rooms ({rooms}); use resample_by_room")
    return next(iter(stores.values()))


def dataset_summary(stores: "FrameStore | Mapping[str, FrameStore]") -> dict:
    """Counts of users, frames, and poses across one or several stores."""
    if isinstance(stores, FrameStore):
        per_room = {stores.room_id: stores}
    else:
        per_room = dict(stores)
    users: set[str] = set()
    frames = 0
    poses = 0
    for store in per_room.values():
        users.update(store.user_ids())
        frames += len(store.frames)
        poses += store.pose_count()
    return {
        "rooms": sorted(per_room),
        "users": len(users),
        "frames": frames,
        "poses": poses,
    }
