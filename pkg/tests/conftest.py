"""Shared builders for tests."""

import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from proxilog.model import TickEvent
from proxilog.resample import FrameStore, Pose

# a whole UTC minute (multiple of 60000 ms), so origins land on it exactly
BASE_TS = 1_600_000_020_000

# verdict lines recorded by the acceptance tests, printed after the run
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_tick(
    user_id="u01",
    ts_utc=BASE_TS,
    entered=True,
    position=(1.0, 0.0, 2.0),
    direction=(0.0, 0.0, -1.0),
    orientation=(0.0, 0.0, 0.0, 1.0),
    fps=45.0,
    muted=False,
    mic_level=None,
    audio_dampened=None,
    room_id="room-a",
) -> TickEvent:
    return TickEvent(
        user_id=user_id,
        ts_utc=ts_utc,
        entered=entered,
        position=tuple(position),
        direction=tuple(direction),
        orientation=tuple(orientation),
        fps=fps,
        muted=muted,
        mic_level=mic_level,
        audio_dampened=audio_dampened,
        room_id=room_id,
    )


def tick_record(**kwargs) -> dict:
    return make_tick(**kwargs).to_record()


def make_pose(user_id, position, direction=(0.0, 0.0, -1.0), source_ts=BASE_TS) -> Pose:
    return Pose(
        user_id=user_id,
        position=tuple(float(c) for c in position),
        direction=tuple(float(c) for c in direction),
        orientation=(0.0, 0.0, 0.0, 1.0),
        source_ts=source_ts,
    )


def store_from_frames(frames: dict, room_id="room-a", period_ms=6000) -> FrameStore:
    """frames: {index: {user: (position, direction) | position}}."""
    store = FrameStore(room_id=room_id, frame_period_ms=period_ms, origin_ts=BASE_TS)
    for index, poses in frames.items():
        out = {}
        for user, value in poses.items():
            if (
                isinstance(value, tuple)
                and len(value) == 2
                and isinstance(value[0], (tuple, list))
            ):
                position, direction = value
            else:
                position, direction = value, (0.0, 0.0, -1.0)
            out[user] = make_pose(user, position, direction)
        store.frames[index] = out
    return store


def unit(x, y, z):
    n = math.sqrt(x * x + y * y + z * z)
    return (x / n, y / n, z / n)


@pytest.fixture
def golden_dir() -> Path:
    return Path(__file__).parent / "golden"


@pytest.fixture
def repo_root() -> Path:
    return Path(__file__).parent.parent
