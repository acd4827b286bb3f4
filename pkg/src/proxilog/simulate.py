"""Deterministic scripted crowd simulator.

Agents follow phase scripts (spawn, attend, mingle, circle, fly, leave) that
tile the scenario duration. Every agent owns an independent RNG substream
derived from (scenario seed, agent index), so adding or removing one agent
never perturbs the others. The merged tick stream is sorted by timestamp
with ties broken by agent order, and two runs with the same seed are
identical event for event.

Walking moves at 1.4 m/s, flying at 5 m/s. Tick rates, when not pinned per
agent, draw from Normal(mu=43.67, sd=15.3) clamped to [10, 90] Hz.
"""

from __future__ import annotations

import heapq
import json
import math
import time
import uuid
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional, Sequence, Union

import numpy as np
import requests

from .model import RoomGeometry, TickEvent

__all__ = [
    "WALK_SPEED",
    "FLY_SPEED",
    "Attend",
    "AgentScript",
    "Circle",
    "DeliveryReport",
    "EmitError",
    "Fly",
    "KEYNOTE_SPEAKER",
    "Leave",
    "Mingle",
    "PRESETS",
    "Scenario",
    "Spawn",
    "build_break_satellites",
    "build_break_single",
    "build_circle",
    "build_keynote",
    "build_spawn_pileup",
    "emit",
    "quat_from_direction",
    "run_scenario",
    "scenario_from_json",
    "scenario_to_json",
    "validate_scenario",
]

WALK_SPEED = 1.4  # m/s
FLY_SPEED = 5.0  # m/s
RATE_MU = 43.67
RATE_SIGMA = 15.3
RATE_MIN = 10.0
RATE_MAX = 90.0
# a whole UTC minute, so default runs produce minute-aligned frame origins
DEFAULT_START_TS = 1_600_000_020_000

Point = tuple[float, float, float]


# ---------------------------------------------------------------------------
# phase scripts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Spawn:
    """Appear at a point (with optional one-time floor jitter) and stand."""

    point: Point
    duration_s: float
    jitter: float = 0.0
    kind: str = field(default="spawn", init=False)


@dataclass(frozen=True)
class Attend:
    """Stand still facing a target, with per-tick uniform yaw jitter.

    With jitter_deg = j, each tick's facing is the bearing to the target
    rotated about the vertical by an independent U(-j, +j) draw. height, if
    set, moves the agent vertically to that y at fly speed first.
    """

    target: Point
    duration_s: float
    jitter_deg: float = 0.0
    height: Optional[float] = None
    kind: str = field(default="attend", init=False)


@dataclass(frozen=True)
class Mingle:
    """Hop between waypoints: walk at 1.4 m/s, dwell, pick the next at random.

    A single waypoint means walk there and dwell for the rest of the phase.
    With face_target set, the agent faces that point the whole time (with
    optional yaw jitter); otherwise it faces its movement direction.
    """

    waypoints: tuple[Point, ...]
    duration_s: float
    dwell_s: float = 8.0
    face_target: Optional[Point] = None
    jitter_deg: float = 0.0
    kind: str = field(default="mingle", init=False)


@dataclass(frozen=True)
class Circle:
    """Stand on slot `slot` of a `count`-sided circle, facing its centre."""

    centre: Point
    radius: float
    slot: int
    count: int
    duration_s: float
    jitter: float = 0.0
    kind: str = field(default="circle", init=False)


@dataclass(frozen=True)
class Fly:
    """Ascend (or descend) to a hover height at 5 m/s, then hover."""

    height: float
    duration_s: float
    face: Optional[Point] = None
    kind: str = field(default="fly", init=False)


@dataclass(frozen=True)
class Leave:
    """Gone: no ticks are emitted for the rest of this phase."""

    duration_s: float
    kind: str = field(default="leave", init=False)


Phase = Union[Spawn, Attend, Mingle, Circle, Fly, Leave]


@dataclass(frozen=True)
class AgentScript:
    user_id: str
    phases: tuple[Phase, ...]
    tick_rate_hz: Optional[float] = None


@dataclass(frozen=True)
class Scenario:
    room: RoomGeometry
    duration_s: float
    agents: tuple[AgentScript, ...]
    seed: int = 0
    start_ts_ms: int = DEFAULT_START_TS


def validate_scenario(scenario: Scenario) -> None:
    """Raise ValueError on structural problems."""
    if scenario.duration_s <= 0:
        raise ValueError("scenario duration must be positive")
    if not scenario.agents:
        raise ValueError("scenario needs at least one agent")
    seen = set()
    for agent in scenario.agents:
        if agent.user_id in seen:
            raise ValueError(f"duplicate user_id: {agent.user_id}")
        seen.add(agent.user_id)
        if agent.tick_rate_hz is not None and not (
            RATE_MIN <= agent.tick_rate_hz <= RATE_MAX
        ):
            raise ValueError(f"tick rate out of range for {agent.user_id}")
        if not agent.phases:
            raise ValueError(f"agent {agent.user_id} has no phases")
        total = 0.0
        for phase in agent.phases:
            if phase.duration_s < 0:
                raise ValueError("phase durations must be non-negative")
            if isinstance(phase, Mingle) and not phase.waypoints:
                raise ValueError("mingle needs at least one waypoint")
            if isinstance(phase, Circle):
                if phase.count < 1 or not (0 <= phase.slot < phase.count):
                    raise ValueError("circle slot must lie in [0, count)")
                if phase.radius <= 0:
                    raise ValueError("circle radius must be positive")
            total += phase.duration_s
        if abs(total - scenario.duration_s) > 1e-6:
            raise ValueError(
                f"phases of {agent.user_id} cover {total}s, "
                f"scenario lasts {scenario.duration_s}s"
            )


# ---------------------------------------------------------------------------
# geometry helpers
# ---------------------------------------------------------------------------


def _normalize3(x: float, y: float, z: float) -> Optional[Point]:
    norm = math.sqrt(x * x + y * y + z * z)
    if norm == 0.0:
        return None
    return (x / norm, y / norm, z / norm)


def _yaw_rotate(direction: Point, angle: float) -> Point:
    # rotate about the vertical (y) axis
    c, s = math.cos(angle), math.sin(angle)
    dx, dy, dz = direction
    return (dx * c + dz * s, dy, -dx * s + dz * c)


def _bearing(source: Point, target: Point) -> Optional[Point]:
    return _normalize3(
        target[0] - source[0], target[1] - source[1], target[2] - source[2]
    )


def quat_from_direction(direction: Point) -> tuple[float, float, float, float]:
    """Quaternion (x, y, z, w) rotating the base forward (0, 0, -1) onto
    `direction` via yaw about y then pitch about x."""
    dx, dy, dz = direction
    pitch = math.asin(max(-1.0, min(1.0, dy)))
    yaw = math.atan2(-dx, -dz)
    sy, cy = math.sin(yaw / 2.0), math.cos(yaw / 2.0)
    sx, cx = math.sin(pitch / 2.0), math.cos(pitch / 2.0)
    return (cy * sx, cx * sy, -sy * sx, cy * cx)


# ---------------------------------------------------------------------------
# phase runtimes
# ---------------------------------------------------------------------------

PoseFn = Callable[[float], Optional[tuple[Point, Point]]]


def _runtime(
    phase: Phase, entry_pos: Point, entry_dir: Point, rng: np.random.Generator
) -> tuple[PoseFn, Point, Point]:
    """Materialise one phase: (pose_at(t_local), exit_pos, exit_dir).

    All begin-time randomness is drawn here, in a fixed order; only per-tick
    facing jitter draws inside pose_at.
    """
    if isinstance(phase, Spawn):
        jx = rng.uniform(-phase.jitter, phase.jitter) if phase.jitter > 0 else 0.0
        jz = rng.uniform(-phase.jitter, phase.jitter) if phase.jitter > 0 else 0.0
        pos = (phase.point[0] + jx, phase.point[1], phase.point[2] + jz)
        yaw = rng.uniform(0.0, 2.0 * math.pi)
        facing = (math.sin(yaw), 0.0, math.cos(yaw))

        def pose(t: float):
            return (pos, facing)

        return pose, pos, facing

    if isinstance(phase, Attend):
        x0, y0, z0 = entry_pos
        target_y = y0 if phase.height is None else phase.height
        climb = abs(target_y - y0) / FLY_SPEED
        sign = 1.0 if target_y >= y0 else -1.0
        jitter = math.radians(phase.jitter_deg)

        def pos_at(t: float) -> Point:
            if t >= climb:
                return (x0, target_y, z0)
            return (x0, y0 + sign * FLY_SPEED * t, z0)

        def pose(t: float):
            pos = pos_at(t)
            base = _bearing(pos, phase.target) or entry_dir
            if jitter > 0.0:
                return (pos, _yaw_rotate(base, rng.uniform(-jitter, jitter)))
            return (pos, base)

        exit_pos = pos_at(phase.duration_s)
        exit_dir = _bearing(exit_pos, phase.target) or entry_dir
        return pose, exit_pos, exit_dir

    if isinstance(phase, Mingle):
        jitter = math.radians(phase.jitter_deg)
        # eager itinerary: all hop choices draw now, so per-tick sampling
        # never shifts the random stream
        segments: list[tuple[float, float, Point, Point, Point]] = []
        t0 = 0.0
        pos = entry_pos
        facing = entry_dir
        while t0 < phase.duration_s:
            wp = phase.waypoints[int(rng.integers(len(phase.waypoints)))]
            dist = math.dist(pos, wp)
            walk_t = dist / WALK_SPEED
            if walk_t > 0:
                move = _bearing(pos, wp) or facing
                segments.append((t0, t0 + walk_t, pos, wp, move))
                t0 += walk_t
                pos = wp
                facing = move
            if phase.dwell_s > 0:
                segments.append((t0, t0 + phase.dwell_s, pos, pos, facing))
                t0 += phase.dwell_s
            if walk_t <= 0 and phase.dwell_s <= 0:
                break  # degenerate config; avoid spinning forever

        def locate(t: float) -> tuple[Point, Point]:
            for start, end, frm, to, move in segments:
                if t < end or end == segments[-1][1]:
                    if end == start:
                        return to, move
                    frac = min(1.0, max(0.0, (t - start) / (end - start)))
                    cur = (
                        frm[0] + (to[0] - frm[0]) * frac,
                        frm[1] + (to[1] - frm[1]) * frac,
                        frm[2] + (to[2] - frm[2]) * frac,
                    )
                    return cur, move
            return pos, facing

        def pose(t: float):
            cur, move = locate(t)
            if phase.face_target is not None:
                base = _bearing(cur, phase.face_target) or move
            else:
                base = move
            if jitter > 0.0:
                return (cur, _yaw_rotate(base, rng.uniform(-jitter, jitter)))
            return (cur, base)

        exit_pos, exit_move = locate(phase.duration_s)
        if phase.face_target is not None:
            exit_dir = _bearing(exit_pos, phase.face_target) or exit_move
        else:
            exit_dir = exit_move
        return pose, exit_pos, exit_dir

    if isinstance(phase, Circle):
        theta = 2.0 * math.pi * phase.slot / phase.count
        jx = rng.uniform(-phase.jitter, phase.jitter) if phase.jitter > 0 else 0.0
        jz = rng.uniform(-phase.jitter, phase.jitter) if phase.jitter > 0 else 0.0
        pos = (
            phase.centre[0] + phase.radius * math.cos(theta) + jx,
            phase.centre[1],
            phase.centre[2] + phase.radius * math.sin(theta) + jz,
        )
        facing = _bearing(pos, phase.centre) or (0.0, 0.0, -1.0)

        def pose(t: float):
            return (pos, facing)

        return pose, pos, facing

    if isinstance(phase, Fly):
        x0, y0, z0 = entry_pos
        climb = abs(phase.height - y0) / FLY_SPEED
        sign = 1.0 if phase.height >= y0 else -1.0

        def pos_at(t: float) -> Point:
            if t >= climb:
                return (x0, phase.height, z0)
            return (x0, y0 + sign * FLY_SPEED * t, z0)

        def pose(t: float):
            pos = pos_at(t)
            if phase.face is not None:
                return (pos, _bearing(pos, phase.face) or entry_dir)
            return (pos, entry_dir)

        exit_pos = pos_at(phase.duration_s)
        if phase.face is not None:
            exit_dir = _bearing(exit_pos, phase.face) or entry_dir
        else:
            exit_dir = entry_dir
        return pose, exit_pos, exit_dir

    if isinstance(phase, Leave):

        def pose(t: float):
            return None

        return pose, entry_pos, entry_dir

    raise TypeError(f"unknown phase: {phase!r}")


# ---------------------------------------------------------------------------
# scenario execution
# ---------------------------------------------------------------------------


def _agent_rate(scenario: Scenario) -> list[float]:
    """Tick rates in agent order; unpinned rates draw from the shared prior."""
    rng = np.random.default_rng(scenario.seed)
    rates = []
    for agent in scenario.agents:
        draw = float(np.clip(rng.normal(RATE_MU, RATE_SIGMA), RATE_MIN, RATE_MAX))
        rates.append(agent.tick_rate_hz if agent.tick_rate_hz is not None else draw)
    return rates


def _agent_stream(
    scenario: Scenario, index: int, rate: float
) -> Iterator[TickEvent]:
    agent = scenario.agents[index]
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=scenario.seed, spawn_key=(index,))
    )
    phase_ends: list[float] = []
    acc = 0.0
    for phase in agent.phases:
        acc += phase.duration_s
        phase_ends.append(acc)

    # phases materialise lazily but always in script order, chaining each
    # exit pose into the next entry, so rng consumption stays fixed
    runtimes: list[tuple[PoseFn, Point, Point]] = []

    def ensure(upto: int) -> None:
        while len(runtimes) <= upto:
            i = len(runtimes)
            if i == 0:
                entry_pos: Point = (0.0, 0.0, 0.0)
                entry_dir: Point = (0.0, 0.0, -1.0)
            else:
                entry_pos, entry_dir = runtimes[i - 1][1], runtimes[i - 1][2]
            runtimes.append(_runtime(agent.phases[i], entry_pos, entry_dir, rng))

    ticks = int(math.floor(scenario.duration_s * rate)) + 1
    current = 0
    for k in range(ticks):
        t = k / rate
        if t > scenario.duration_s:
            break
        while current < len(agent.phases) - 1 and t >= phase_ends[current]:
            current += 1
        ensure(current)
        phase_start = 0.0 if current == 0 else phase_ends[current - 1]
        result = runtimes[current][0](t - phase_start)
        if result is None:
            continue
        position, direction = result
        yield TickEvent(
            user_id=agent.user_id,
            ts_utc=scenario.start_ts_ms + round(t * 1000.0),
            entered=True,
            position=position,
            direction=direction,
            orientation=quat_from_direction(direction),
            fps=rate,
            muted=False,
            mic_level=None,
            audio_dampened=None,
            room_id=scenario.room.room_id,
        )


def run_scenario(scenario: Scenario) -> Iterator[TickEvent]:
    """Merged tick stream, sorted by timestamp (stable across agents)."""
    validate_scenario(scenario)
    rates = _agent_rate(scenario)
    streams = [
        _agent_stream(scenario, i, rates[i]) for i in range(len(scenario.agents))
    ]
    return heapq.merge(*streams, key=lambda e: e.ts_utc)


# ---------------------------------------------------------------------------
# scenario (de)serialization
# ---------------------------------------------------------------------------


def _point(values) -> Point:
    x, y, z = values
    return (float(x), float(y), float(z))


def _phase_to_dict(phase: Phase) -> dict:
    if isinstance(phase, Spawn):
        return {
            "kind": "spawn",
            "duration_s": phase.duration_s,
            "point": list(phase.point),
            "jitter": phase.jitter,
        }
    if isinstance(phase, Attend):
        return {
            "kind": "attend",
            "duration_s": phase.duration_s,
            "target": list(phase.target),
            "jitter_deg": phase.jitter_deg,
            "height": phase.height,
        }
    if isinstance(phase, Mingle):
        return {
            "kind": "mingle",
            "duration_s": phase.duration_s,
            "waypoints": [list(w) for w in phase.waypoints],
            "dwell_s": phase.dwell_s,
            "face_target": list(phase.face_target) if phase.face_target else None,
            "jitter_deg": phase.jitter_deg,
        }
    if isinstance(phase, Circle):
        return {
            "kind": "circle",
            "duration_s": phase.duration_s,
            "centre": list(phase.centre),
            "radius": phase.radius,
            "slot": phase.slot,
            "count": phase.count,
            "jitter": phase.jitter,
        }
    if isinstance(phase, Fly):
        return {
            "kind": "fly",
            "duration_s": phase.duration_s,
            "height": phase.height,
            "face": list(phase.face) if phase.face else None,
        }
    if isinstance(phase, Leave):
        return {"kind": "leave", "duration_s": phase.duration_s}
    raise TypeError(f"unknown phase: {phase!r}")


def _phase_from_dict(raw: dict) -> Phase:
    kind = raw.get("kind")
    duration = float(raw["duration_s"])
    if kind == "spawn":
        return Spawn(
            point=_point(raw["point"]),
            duration_s=duration,
            jitter=float(raw.get("jitter", 0.0)),
        )
    if kind == "attend":
        height = raw.get("height")
        return Attend(
            target=_point(raw["target"]),
            duration_s=duration,
            jitter_deg=float(raw.get("jitter_deg", 0.0)),
            height=None if height is None else float(height),
        )
    if kind == "mingle":
        face = raw.get("face_target")
        return Mingle(
            waypoints=tuple(_point(w) for w in raw["waypoints"]),
            duration_s=duration,
            dwell_s=float(raw.get("dwell_s", 8.0)),
            face_target=None if face is None else _point(face),
            jitter_deg=float(raw.get("jitter_deg", 0.0)),
        )
    if kind == "circle":
        return Circle(
            centre=_point(raw["centre"]),
            radius=float(raw["radius"]),
            slot=int(raw["slot"]),
            count=int(raw["count"]),
            duration_s=duration,
            jitter=float(raw.get("jitter", 0.0)),
        )
    if kind == "fly":
        face = raw.get("face")
        return Fly(
            height=float(raw["height"]),
            duration_s=duration,
            face=None if face is None else _point(face),
        )
    if kind == "leave":
        return Leave(duration_s=duration)
    raise ValueError(f"unknown phase kind: {kind!r}")


def scenario_to_json(scenario: Scenario) -> str:
    doc = {
        "room": {
            "room_id": scenario.room.room_id,
            "bounds_x": scenario.room.bounds_x,
            "bounds_z": scenario.room.bounds_z,
            "label": scenario.room.label,
        },
        "duration_s": scenario.duration_s,
        "seed": scenario.seed,
        "start_ts_ms": scenario.start_ts_ms,
        "agents": [
            {
                "user_id": agent.user_id,
                "tick_rate_hz": agent.tick_rate_hz,
                "phases": [_phase_to_dict(p) for p in agent.phases],
            }
            for agent in scenario.agents
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def scenario_from_json(text: str) -> Scenario:
    doc = json.loads(text)
    room = RoomGeometry(
        room_id=doc["room"]["room_id"],
        bounds_x=float(doc["room"]["bounds_x"]),
        bounds_z=float(doc["room"]["bounds_z"]),
        label=doc["room"].get("label", ""),
    )
    agents = tuple(
        AgentScript(
            user_id=raw["user_id"],
            phases=tuple(_phase_from_dict(p) for p in raw["phases"]),
            tick_rate_hz=(
                None if raw.get("tick_rate_hz") is None else float(raw["tick_rate_hz"])
            ),
        )
        for raw in doc["agents"]
    )
    scenario = Scenario(
        room=room,
        duration_s=float(doc["duration_s"]),
        agents=agents,
        seed=int(doc.get("seed", 0)),
        start_ts_ms=int(doc.get("start_ts_ms", DEFAULT_START_TS)),
    )
    validate_scenario(scenario)
    return scenario


# ---------------------------------------------------------------------------
# scenario presets
# ---------------------------------------------------------------------------


KEYNOTE_SPEAKER: Point = (35.0, 1.0, 0.5)


def build_keynote(seed: int = 42) -> Scenario:
    """16 agents mingling in a 20 x 15 m patch of a 70 x 40 m room, all
    facing a speaker point with +/-60 degree yaw jitter."""
    room = RoomGeometry(
        room_id="outdoor-meetup", bounds_x=70.0, bounds_z=40.0, label="Outdoor Meetup"
    )
    speaker = KEYNOTE_SPEAKER
    rng = np.random.default_rng(seed)
    agents = []
    for i in range(16):
        # 24 stops with long dwells keep the time-weighted position spread
        # close to uniform over the 20 x 15 m patch
        waypoints = tuple(
            (float(rng.uniform(25.0, 45.0)), 0.0, float(rng.uniform(10.0, 25.0)))
            for _ in range(24)
        )
        agents.append(
            AgentScript(
                user_id=f"u{i + 1:02d}",
                phases=(
                    Spawn(point=waypoints[0], duration_s=4.0, jitter=0.3),
                    Mingle(
                        waypoints=waypoints,
                        duration_s=596.0,
                        dwell_s=24.0,
                        face_target=speaker,
                        jitter_deg=60.0,
                    ),
                ),
            )
        )
    return Scenario(
        room=room, duration_s=600.0, agents=tuple(agents), seed=seed
    )


def build_break_single(seed: int = 43) -> Scenario:
    """Twelve agents in one conversational ring: one dense group."""
    room = RoomGeometry(
        room_id="lake-office", bounds_x=20.0, bounds_z=30.0, label="Lake Office"
    )
    centre: Point = (10.0, 0.0, 15.0)
    agents = tuple(
        AgentScript(
            user_id=f"u{i + 1:02d}",
            phases=(
                Circle(
                    centre=centre,
                    radius=1.8,
                    slot=i,
                    count=12,
                    duration_s=300.0,
                    jitter=0.05,
                ),
            ),
        )
        for i in range(12)
    )
    return Scenario(room=room, duration_s=300.0, agents=agents, seed=seed)


def build_break_satellites(seed: int = 44) -> Scenario:
    """A ring of eight plus five separated pairs: six groups."""
    room = RoomGeometry(
        room_id="lake-office", bounds_x=20.0, bounds_z=30.0, label="Lake Office"
    )
    agents: list[AgentScript] = []
    centre: Point = (10.0, 0.0, 8.0)
    for i in range(8):
        agents.append(
            AgentScript(
                user_id=f"u{i + 1:02d}",
                phases=(
                    Circle(
                        centre=centre,
                        radius=1.4,
                        slot=i,
                        count=8,
                        duration_s=300.0,
                        jitter=0.02,
                    ),
                ),
            )
        )
    pair_centres: tuple[Point, ...] = (
        (3.0, 0.0, 3.0),
        (17.0, 0.0, 3.0),
        (3.0, 0.0, 25.0),
        (17.0, 0.0, 25.0),
        (10.0, 0.0, 20.0),
    )
    idx = 9
    for pc in pair_centres:
        for slot in range(2):
            agents.append(
                AgentScript(
                    user_id=f"u{idx:02d}",
                    phases=(
                        Circle(
                            centre=pc,
                            radius=0.4,
                            slot=slot,
                            count=2,
                            duration_s=300.0,
                            jitter=0.02,
                        ),
                    ),
                )
            )
            idx += 1
    return Scenario(room=room, duration_s=300.0, agents=tuple(agents), seed=seed)


def build_spawn_pileup(seed: int = 45) -> Scenario:
    """Eight agents spawn on one point and disperse radially, one by one.

    The intimate collision rate decays strictly across successive thirds of
    the run."""
    room = RoomGeometry(
        room_id="outdoor-meetup", bounds_x=70.0, bounds_z=40.0, label="Outdoor Meetup"
    )
    portal: Point = (35.0, 0.0, 20.0)
    duration = 90.0
    agents = []
    for k in range(8):
        theta = 2.0 * math.pi * k / 8.0
        target: Point = (
            portal[0] + 17.0 * math.cos(theta),
            0.0,
            portal[2] + 17.0 * math.sin(theta),
        )
        hold = 5.0 + 10.0 * k
        agents.append(
            AgentScript(
                user_id=f"u{k + 1:02d}",
                phases=(
                    Spawn(point=portal, duration_s=hold, jitter=0.15),
                    Mingle(
                        waypoints=(target,),
                        duration_s=duration - hold,
                        dwell_s=1e9,
                    ),
                ),
            )
        )
    return Scenario(room=room, duration_s=duration, agents=tuple(agents), seed=seed)


def build_circle(seed: int = 46, count: int = 5, radius: float = 1.5) -> Scenario:
    """A single standing ring; handy for nearest-neighbour geometry checks."""
    room = RoomGeometry(
        room_id="lake-office", bounds_x=20.0, bounds_z=30.0, label="Lake Office"
    )
    centre: Point = (10.0, 0.0, 15.0)
    agents = tuple(
        AgentScript(
            user_id=f"u{i + 1:02d}",
            phases=(
                Circle(
                    centre=centre,
                    radius=radius,
                    slot=i,
                    count=count,
                    duration_s=120.0,
                ),
            ),
        )
        for i in range(count)
    )
    return Scenario(room=room, duration_s=120.0, agents=agents, seed=seed)


PRESETS = {
    "keynote": build_keynote,
    "break-single": build_break_single,
    "break-satellites": build_break_satellites,
    "spawn-pileup": build_spawn_pileup,
    "circle5": build_circle,
}


# ---------------------------------------------------------------------------
# delivery
# ---------------------------------------------------------------------------


@dataclass
class DeliveryReport:
    sink: str
    batches_sent: int = 0
    events_sent: int = 0
    events_accepted: int = 0
    events_rejected: int = 0
    failures: int = 0


class EmitError(RuntimeError):
    """Delivery gave up; .report carries the partial tallies."""

    def __init__(self, message: str, report: DeliveryReport):
        super().__init__(message)
        self.report = report


def emit(
    events: Iterable[TickEvent],
    sink: str,
    batch_size: int = 4000,
    session_id: Optional[str] = None,
    retries: int = 3,
    backoff_s: float = 0.25,
    timeout_s: float = 10.0,
) -> DeliveryReport:
    """Deliver a tick stream to a file path or an ingest server URL.

    HTTP sinks receive batches of batch_size events per POST (final remainder
    batch included). Connection failures and 5xx responses retry with
    exponential backoff up to `retries` attempts per batch, then raise
    EmitError carrying the partial report. A 4xx response is not retried.
    """
    if sink.startswith("http://") or sink.startswith("https://"):
        return _emit_http(
            events, sink, batch_size, session_id, retries, backoff_s, timeout_s
        )
    report = DeliveryReport(sink=sink)
    with open(sink, "w", encoding="utf-8") as fh:
        for event in events:
            fh.write(event.to_json_line() + "\n")
            report.events_sent += 1
    report.events_accepted = report.events_sent
    return report


def _emit_http(
    events, sink, batch_size, session_id, retries, backoff_s, timeout_s
) -> DeliveryReport:
    url = sink.rstrip("/")
    if not url.endswith("/ticks"):
        url += "/ticks"
    session_id = session_id or f"emit-{uuid.uuid4().hex[:12]}"
    report = DeliveryReport(sink=sink)

    def post(batch: list[dict]) -> None:
        envelope = json.dumps(
            {"client_session_id": session_id, "events": batch},
            separators=(",", ":"),
        )
        attempt = 0
        while True:
            try:
                response = requests.post(
                    url,
                    data=envelope,
                    headers={"Content-Type": "application/json"},
                    timeout=timeout_s,
                )
            except requests.RequestException as exc:
                report.failures += 1
                attempt += 1
                if attempt >= retries:
                    raise EmitError(f"delivery failed after {attempt} attempts: {exc}", report)
                time.sleep(backoff_s * (2.0 ** (attempt - 1)))
                continue
            if response.status_code == 200:
                ack = response.json()
                report.batches_sent += 1
                report.events_sent += len(batch)
                report.events_accepted += int(ack.get("accepted", 0))
                report.events_rejected += int(ack.get("rejected", 0))
                return
            report.failures += 1
            if 500 <= response.status_code < 600:
                attempt += 1
                if attempt >= retries:
                    raise EmitError(
                        f"delivery failed after {attempt} attempts: "
                        f"HTTP {response.status_code}",
                        report,
                    )
                time.sleep(backoff_s * (2.0 ** (attempt - 1)))
                continue
            raise EmitError(f"server rejected batch: HTTP {response.status_code}", report)

    batch: list[dict] = []
    for event in events:
        batch.append(event.to_record())
        if len(batch) >= batch_size:
            post(batch)
            batch = []
    if batch:
        post(batch)
    return report
