"""Telemetry tick schema: validation, canonical JSON, stream segmentation.

Coordinate convention used across the package: y is vertical, the floor
plane is (x, z). Positions are metres, timestamps are UTC epoch milliseconds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional

__all__ = [
    "CANONICAL_FIELDS",
    "RoomGeometry",
    "SessionLog",
    "TickEvent",
    "ValidationError",
    "sort_and_segment",
    "tick_from_json_line",
    "validate_tick",
]

# Canonical wire order. Every serialized tick carries all eleven keys, in
# this order, with null for absent optionals.
CANONICAL_FIELDS = (
    "user_id",
    "ts_utc",
    "entered",
    "position",
    "direction",
    "orientation",
    "fps",
    "muted",
    "mic_level",
    "audio_dampened",
    "room_id",
)

# Unit vectors are renormalised when the norm is off by at most this much,
# rejected beyond it.
UNIT_NORM_TOLERANCE = 1e-3
# Below this deviation the vector is stored as-is, which keeps validation
# idempotent (re-validating an accepted event must not move any bits).
_UNIT_NORM_EXACT = 1e-12


class ValidationError(ValueError):
    """Raised when a raw tick record violates the schema."""


@dataclass(frozen=True)
class TickEvent:
    """One validated client tick."""

    user_id: str
    ts_utc: int
    entered: bool
    position: tuple[float, float, float]
    direction: tuple[float, float, float]
    orientation: tuple[float, float, float, float]
    fps: float
    muted: bool
    mic_level: Optional[float]
    audio_dampened: Optional[bool]
    room_id: str

    def to_record(self) -> dict:
        """Canonical dict, keys in wire order."""
        return {
            "user_id": self.user_id,
            "ts_utc": self.ts_utc,
            "entered": self.entered,
            "position": list(self.position),
            "direction": list(self.direction),
            "orientation": list(self.orientation),
            "fps": self.fps,
            "muted": self.muted,
            "mic_level": self.mic_level,
            "audio_dampened": self.audio_dampened,
            "room_id": self.room_id,
        }

    def to_json_line(self) -> str:
        return json.dumps(self.to_record(), separators=(",", ":"))


@dataclass(frozen=True)
class RoomGeometry:
    """Floor bounds of one room. The floor is the (x, z) plane."""

    room_id: str
    bounds_x: float
    bounds_z: float
    label: str = ""

    def __post_init__(self) -> None:
        if not self.room_id:
            raise ValidationError("room_id must be non-empty")
        if not (self.bounds_x > 0 and self.bounds_z > 0):
            raise ValidationError("room bounds must be positive")


@dataclass
class SessionLog:
    """Validated events read back from an append-only log."""

    events: list[TickEvent] = field(default_factory=list)
    skipped_lines: int = 0

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[TickEvent]:
        return iter(self.events)

    @property
    def user_ids(self) -> list[str]:
        return sorted({e.user_id for e in self.events})

    @property
    def room_ids(self) -> list[str]:
        return sorted({e.room_id for e in self.events})

    @property
    def span_ms(self) -> Optional[tuple[int, int]]:
        if not self.events:
            return None
        stamps = [e.ts_utc for e in self.events]
        return (min(stamps), max(stamps))


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def _require_str(raw: Mapping, key: str) -> str:
    try:
        value = raw[key]
    except KeyError:
        raise ValidationError(f"missing field: {key}") from None
    if not isinstance(value, str) or not value:
        raise ValidationError(f"{key} must be a non-empty string")
    return value


def _require_bool(raw: Mapping, key: str) -> bool:
    try:
        value = raw[key]
    except KeyError:
        raise ValidationError(f"missing field: {key}") from None
    if not isinstance(value, bool):
        raise ValidationError(f"{key} must be a boolean")
    return value


def _require_number(raw: Mapping, key: str) -> float:
    try:
        value = raw[key]
    except KeyError:
        raise ValidationError(f"missing field: {key}") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{key} must be a number")
    out = float(value)
    if not math.isfinite(out):
        raise ValidationError(f"{key} must be finite")
    return out


def _require_vector(raw: Mapping, key: str, size: int) -> tuple:
    try:
        value = raw[key]
    except KeyError:
        raise ValidationError(f"missing field: {key}") from None
    if not isinstance(value, (list, tuple)) or len(value) != size:
        raise ValidationError(f"{key} must be a {size}-vector")
    out = []
    for comp in value:
        if isinstance(comp, bool) or not isinstance(comp, (int, float)):
            raise ValidationError(f"{key} components must be numbers")
        comp = float(comp)
        if not math.isfinite(comp):
            raise ValidationError(f"{key} components must be finite")
        out.append(comp)
    return tuple(out)


def _unit(vec: tuple, key: str) -> tuple:
    # Renormalise only when meaningfully off; exact passthrough otherwise
    # keeps validation idempotent.
    norm = math.sqrt(math.fsum(c * c for c in vec))
    if abs(norm - 1.0) <= _UNIT_NORM_EXACT:
        return vec
    if abs(norm - 1.0) > UNIT_NORM_TOLERANCE:
        raise ValidationError(f"{key} must be unit length (norm={norm:.6f})")
    return tuple(c / norm for c in vec)


def validate_tick(raw: Mapping) -> TickEvent:
    """Validate one raw record and return the canonical event.

    Unknown keys are ignored. Direction and orientation are renormalised when
    their norm is within 1e-3 of 1 and rejected otherwise. Raises
    ValidationError on any schema violation.
    """
    if not isinstance(raw, Mapping):
        raise ValidationError("tick must be a JSON object")

    user_id = _require_str(raw, "user_id")
    room_id = _require_str(raw, "room_id")

    try:
        ts = raw["ts_utc"]
    except KeyError:
        raise ValidationError("missing field: ts_utc") from None
    if isinstance(ts, bool):
        raise ValidationError("ts_utc must be an integer")
    if isinstance(ts, float):
        if not (math.isfinite(ts) and ts.is_integer()):
            raise ValidationError("ts_utc must be an integer")
        ts = int(ts)
    elif not isinstance(ts, int):
        raise ValidationError("ts_utc must be an integer")

    entered = _require_bool(raw, "entered")
    muted = _require_bool(raw, "muted")

    position = _require_vector(raw, "position", 3)
    direction = _unit(_require_vector(raw, "direction", 3), "direction")
    orientation = _unit(_require_vector(raw, "orientation", 4), "orientation")

    fps = _require_number(raw, "fps")
    if fps < 0:
        raise ValidationError("fps must be non-negative")

    mic_level = raw.get("mic_level")
    if mic_level is not None:
        if isinstance(mic_level, bool) or not isinstance(mic_level, (int, float)):
            raise ValidationError("mic_level must be a number or null")
        mic_level = float(mic_level)
        if not math.isfinite(mic_level) or mic_level < 0:
            raise ValidationError("mic_level must be finite and non-negative")

    audio_dampened = raw.get("audio_dampened")
    if audio_dampened is not None and not isinstance(audio_dampened, bool):
        raise ValidationError("audio_dampened must be a boolean or null")

    return TickEvent(
        user_id=user_id,
        ts_utc=ts,
        entered=entered,
        position=position,
        direction=direction,
        orientation=orientation,
        fps=fps,
        muted=muted,
        mic_level=mic_level,
        audio_dampened=audio_dampened,
        room_id=room_id,
    )


def tick_from_json_line(line: str) -> TickEvent:
    """Parse and validate one JSONL line."""
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc}") from None
    return validate_tick(raw)


# ---------------------------------------------------------------------------
# stream segmentation
# ---------------------------------------------------------------------------


def sort_and_segment(
    events: Iterable[TickEvent],
) -> dict[tuple[str, str], list[TickEvent]]:
    """Split events into per-(user_id, room_id) streams sorted by ts_utc.

    The sort is stable: events with equal timestamps keep their input order.
    """
    ordered = sorted(events, key=lambda e: e.ts_utc)
    streams: dict[tuple[str, str], list[TickEvent]] = {}
    for event in ordered:
        streams.setdefault((event.user_id, event.room_id), []).append(event)
    return streams
