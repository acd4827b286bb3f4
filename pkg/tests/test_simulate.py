"""Scripted crowd simulator: tick cadence, phase kinematics, delivery."""

import json
import math
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from conftest import make_tick
from proxilog.engine import intimate_collision_rate, nearest_neighbour_series, pairwise
from proxilog.ingest import IngestServer, read_log
from proxilog.model import RoomGeometry
from proxilog.resample import resample
from proxilog.simulate import (
    FLY_SPEED,
    PRESETS,
    RATE_MAX,
    RATE_MIN,
    WALK_SPEED,
    AgentScript,
    Attend,
    Circle,
    EmitError,
    Fly,
    Leave,
    Mingle,
    Scenario,
    Spawn,
    build_break_satellites,
    build_break_single,
    build_circle,
    build_spawn_pileup,
    emit,
    quat_from_direction,
    run_scenario,
    scenario_from_json,
    scenario_to_json,
    validate_scenario,
)

ROOM = RoomGeometry(room_id="sim-room", bounds_x=40.0, bounds_z=40.0)
START = 1_600_000_020_000


def _solo(phases, rate=30.0, duration=None, seed=7):
    if duration is None:
        duration = sum(p.duration_s for p in phases)
    return Scenario(
        room=ROOM,
        duration_s=duration,
        agents=(AgentScript(user_id="solo", phases=tuple(phases), tick_rate_hz=rate),),
        seed=seed,
    )


# ---------------------------------------------------------------------------
# cadence and determinism
# ---------------------------------------------------------------------------


def test_pinned_rate_tick_count_and_alignment():
    events = list(run_scenario(_solo([Spawn(point=(5.0, 0.0, 5.0), duration_s=10.0)])))
    assert len(events) == 10 * 30 + 1  # fencepost tick at t = 0
    assert events[0].ts_utc == START
    assert events[-1].ts_utc == START + 10_000
    for k, event in enumerate(events):
        assert event.ts_utc == START + round(k / 30.0 * 1000.0)
        assert event.fps == 30.0
        assert event.entered is True
        assert event.muted is False
        assert event.room_id == "sim-room"


def test_unpinned_rates_clamped_and_seeded():
    scenario = build_circle(seed=46)
    rates = {e.user_id: e.fps for e in run_scenario(scenario)}
    assert len(rates) == 5
    assert all(RATE_MIN <= r <= RATE_MAX for r in rates.values())
    again = {e.user_id: e.fps for e in run_scenario(build_circle(seed=46))}
    assert rates == again
    other = {e.user_id: e.fps for e in run_scenario(build_circle(seed=47))}
    assert rates != other


def test_run_is_deterministic_event_for_event():
    a = list(run_scenario(build_spawn_pileup()))
    b = list(run_scenario(build_spawn_pileup()))
    assert a == b


def test_merge_sorted_with_stable_ties():
    scenario = Scenario(
        room=ROOM,
        duration_s=5.0,
        agents=(
            AgentScript("first", (Spawn((1.0, 0.0, 1.0), 5.0),), tick_rate_hz=20.0),
            AgentScript("second", (Spawn((9.0, 0.0, 9.0), 5.0),), tick_rate_hz=20.0),
        ),
        seed=1,
    )
    events = list(run_scenario(scenario))
    stamps = [e.ts_utc for e in events]
    assert stamps == sorted(stamps)
    # equal timestamps keep agent order
    for left, right in zip(events, events[1:]):
        if left.ts_utc == right.ts_utc:
            assert (left.user_id, right.user_id) == ("first", "second")


def test_emitted_events_validate_and_stay_in_room():
    for name, build in PRESETS.items():
        scenario = build()
        count = 0
        for event in run_scenario(scenario):
            count += 1
            if count > 500:
                break
            x, _, z = event.position
            assert 0.0 <= x <= scenario.room.bounds_x, name
            assert 0.0 <= z <= scenario.room.bounds_z, name
            assert abs(sum(c * c for c in event.direction) - 1.0) < 1e-9


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def test_validate_rejects_bad_scenarios():
    good = _solo([Spawn((1.0, 0.0, 1.0), 10.0)])
    validate_scenario(good)

    bad_tiling = _solo([Spawn((1.0, 0.0, 1.0), 9.0)], duration=10.0)
    with pytest.raises(ValueError):
        validate_scenario(bad_tiling)

    dupes = Scenario(
        room=ROOM,
        duration_s=5.0,
        agents=(
            AgentScript("x", (Spawn((1.0, 0.0, 1.0), 5.0),)),
            AgentScript("x", (Spawn((2.0, 0.0, 2.0), 5.0),)),
        ),
    )
    with pytest.raises(ValueError):
        validate_scenario(dupes)

    with pytest.raises(ValueError):
        validate_scenario(Scenario(room=ROOM, duration_s=5.0, agents=()))
    with pytest.raises(ValueError):
        validate_scenario(_solo([Spawn((1.0, 0.0, 1.0), 5.0)], rate=5.0))
    with pytest.raises(ValueError):
        validate_scenario(_solo([Mingle(waypoints=(), duration_s=5.0)]))
    with pytest.raises(ValueError):
        validate_scenario(
            _solo([Circle(centre=(1.0, 0.0, 1.0), radius=1.0, slot=3, count=3, duration_s=5.0)])
        )
    with pytest.raises(ValueError):
        validate_scenario(
            _solo([Circle(centre=(1.0, 0.0, 1.0), radius=-1.0, slot=0, count=3, duration_s=5.0)])
        )


# ---------------------------------------------------------------------------
# phase kinematics
# ---------------------------------------------------------------------------


def test_spawn_jitter_stays_in_box():
    for seed in range(10):
        scenario = _solo([Spawn(point=(10.0, 0.0, 10.0), duration_s=2.0, jitter=0.3)], seed=seed)
        first = next(iter(run_scenario(scenario)))
        x, y, z = first.position
        assert abs(x - 10.0) <= 0.3 and abs(z - 10.0) <= 0.3
        assert y == 0.0


def test_attend_faces_target_within_jitter():
    target = (20.0, 0.0, 10.0)
    scenario = _solo(
        [
            Spawn(point=(10.0, 0.0, 10.0), duration_s=1.0),
            Attend(target=target, duration_s=5.0, jitter_deg=60.0),
        ]
    )
    attend_events = [e for e in run_scenario(scenario) if e.ts_utc >= START + 1000]
    assert attend_events
    yaws = set()
    for event in attend_events:
        x, _, z = event.position
        bearing = math.atan2(target[2] - z, target[0] - x)
        got = math.atan2(event.direction[2], event.direction[0])
        off = math.degrees(abs((got - bearing + math.pi) % (2 * math.pi) - math.pi))
        assert off <= 60.0 + 1e-9
        yaws.add(round(off, 6))
    assert len(yaws) > 10  # per-tick jitter actually varies


def test_attend_without_jitter_faces_exactly():
    target = (20.0, 0.0, 10.0)
    scenario = _solo(
        [
            Spawn(point=(10.0, 0.0, 10.0), duration_s=1.0),
            Attend(target=target, duration_s=2.0),
        ]
    )
    for event in run_scenario(scenario):
        if event.ts_utc >= START + 1000:
            assert event.direction == (1.0, 0.0, 0.0)


def test_mingle_moves_at_walk_speed():
    waypoints = ((5.0, 0.0, 5.0), (35.0, 0.0, 5.0), (35.0, 0.0, 35.0), (5.0, 0.0, 35.0))
    scenario = _solo(
        [
            Spawn(point=waypoints[0], duration_s=1.0),
            Mingle(waypoints=waypoints, duration_s=59.0, dwell_s=2.0),
        ],
        rate=20.0,
    )
    events = list(run_scenario(scenario))
    deltas = []
    for left, right in zip(events, events[1:]):
        dt = (right.ts_utc - left.ts_utc) / 1000.0
        step = math.dist(left.position, right.position)
        assert step <= WALK_SPEED * dt + 1e-6
        deltas.append(step / dt)
    assert max(deltas) == pytest.approx(WALK_SPEED, rel=1e-6)  # it does walk


def test_fly_climbs_at_fly_speed_then_hovers():
    scenario = _solo(
        [
            Spawn(point=(10.0, 0.0, 10.0), duration_s=1.0),
            Fly(height=6.0, duration_s=9.0, face=(0.0, 0.0, 0.0)),
        ],
        rate=20.0,
    )
    for event in run_scenario(scenario):
        t = (event.ts_utc - START) / 1000.0
        if t < 1.0:
            assert event.position[1] == 0.0
        else:
            expected = min(6.0, FLY_SPEED * (t - 1.0))
            assert event.position[1] == pytest.approx(expected, abs=1e-9)


def test_leave_stops_ticks():
    scenario = _solo(
        [Spawn(point=(10.0, 0.0, 10.0), duration_s=5.0), Leave(duration_s=5.0)],
        rate=10.0,
    )
    events = list(run_scenario(scenario))
    assert len(events) == 50  # t in [0, 5) only
    assert events[-1].ts_utc < START + 5000


def test_circle_slots_realise_chord_geometry():
    count, radius = 5, 1.5
    scenario = build_circle(seed=46, count=count, radius=radius)
    store = resample(run_scenario(scenario))
    chord = 2.0 * radius * math.sin(math.pi / count)
    samples = nearest_neighbour_series(store)
    assert samples
    for sample in samples:
        assert sample.distance == pytest.approx(chord, rel=1e-9)


def test_spawn_pileup_collisions_decay():
    store = resample(run_scenario(build_spawn_pileup()))
    frames = sorted(store.frame_indices())
    thirds = np.array_split(np.array(frames), 3)
    rates = []
    for chunk in thirds:
        distances = [
            s.distance
            for s in nearest_neighbour_series(store)
            if s.frame in set(int(f) for f in chunk)
        ]
        rates.append(intimate_collision_rate(distances))
    assert rates[0] > rates[1] > rates[2]


# ---------------------------------------------------------------------------
# orientation quaternion
# ---------------------------------------------------------------------------


def _qmul(a, b):
    x1, y1, z1, w1 = a
    x2, y2, z2, w2 = b
    return (
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
    )


def _qrotate(q, v):
    x, y, z, w = q
    rotated = _qmul(_qmul(q, (v[0], v[1], v[2], 0.0)), (-x, -y, -z, w))
    return rotated[:3]


def test_quat_identity_for_base_forward():
    assert quat_from_direction((0.0, 0.0, -1.0)) == (0.0, 0.0, 0.0, 1.0)


def test_quat_rotates_base_forward_onto_direction():
    rng = np.random.default_rng(89)
    for _ in range(200):
        v = rng.normal(size=3)
        v /= np.linalg.norm(v)
        if abs(v[1]) > 0.99:
            continue  # straight up and down is yaw-degenerate
        d = (float(v[0]), float(v[1]), float(v[2]))
        q = quat_from_direction(d)
        assert sum(c * c for c in q) == pytest.approx(1.0, abs=1e-12)
        got = _qrotate(q, (0.0, 0.0, -1.0))
        assert got == pytest.approx(d, abs=1e-9)


def test_events_carry_matching_orientation():
    scenario = _solo([Spawn(point=(3.0, 0.0, 3.0), duration_s=1.0)])
    for event in run_scenario(scenario):
        assert event.orientation == quat_from_direction(event.direction)


# ---------------------------------------------------------------------------
# scenario files
# ---------------------------------------------------------------------------


def test_scenario_json_round_trip():
    scenario = build_break_satellites()
    text = scenario_to_json(scenario)
    back = scenario_from_json(text)
    assert back == scenario
    assert scenario_to_json(back) == text


def test_preset_shapes():
    assert len(PRESETS["keynote"]().agents) == 16
    assert len(build_break_single().agents) == 12
    assert len(build_break_satellites().agents) == 18
    assert len(build_spawn_pileup().agents) == 8
    assert len(build_circle().agents) == 5
    for build in PRESETS.values():
        validate_scenario(build())


def test_committed_scenario_files_load(repo_root):
    paths = sorted((repo_root / "scenarios").glob("*.json"))
    assert len(paths) == 5
    for path in paths:
        scenario = scenario_from_json(path.read_text())
        assert scenario.agents


# ---------------------------------------------------------------------------
# delivery
# ---------------------------------------------------------------------------


def test_emit_to_file_round_trips(tmp_path):
    events = [make_tick(ts_utc=START + i) for i in range(100)]
    path = str(tmp_path / "out.jsonl")
    report = emit(events, path)
    assert report.events_sent == 100
    assert report.events_accepted == 100
    assert read_log(path).events == events


def test_emit_batches_against_live_server(tmp_path):
    events = [make_tick(ts_utc=START + i) for i in range(10_000)]
    path = str(tmp_path / "ticks.jsonl")
    with IngestServer(path) as server:
        report = emit(events, server.url, session_id="batch-test")
    assert report.batches_sent == 3  # 4000 + 4000 + 2000
    assert report.events_sent == 10_000
    assert report.events_accepted == 10_000
    assert report.events_rejected == 0
    assert report.failures == 0
    back = read_log(path)
    assert back.events == events


def test_emit_dead_endpoint_raises_with_partial_report():
    events = [make_tick(ts_utc=START + i) for i in range(10)]
    with pytest.raises(EmitError) as exc_info:
        emit(events, "http://127.0.0.1:9", retries=2, backoff_s=0.01, timeout_s=0.5)
    report = exc_info.value.report
    assert report.batches_sent == 0
    assert report.events_accepted == 0
    assert report.failures == 2


def test_emit_4xx_fails_fast(tmp_path):
    # server batch limit below the emit batch size guarantees a 400
    path = str(tmp_path / "ticks.jsonl")
    events = [make_tick(ts_utc=START + i) for i in range(10)]
    with IngestServer(path, batch_limit=5) as server:
        with pytest.raises(EmitError) as exc_info:
            emit(events, server.url, batch_size=10, backoff_s=0.01)
    assert exc_info.value.report.failures == 1
    assert read_log(path).events == []


class _FlakyHandler(BaseHTTPRequestHandler):
    calls = 0

    def log_message(self, fmt, *args):
        pass

    def do_POST(self):
        body = self.rfile.read(int(self.headers["Content-Length"]))
        type(self).calls += 1
        if type(self).calls == 1:
            self.send_response(503)
            self.end_headers()
            return
        n = len(json.loads(body)["events"])
        payload = json.dumps({"accepted": n - 1, "rejected": 1}).encode()
        self.send_response(200)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)


def test_emit_retries_5xx_and_honours_ack():
    _FlakyHandler.calls = 0
    httpd = HTTPServer(("127.0.0.1", 0), _FlakyHandler)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    try:
        url = f"http://127.0.0.1:{httpd.server_address[1]}"
        events = [make_tick(ts_utc=START + i) for i in range(6)]
        report = emit(events, url, backoff_s=0.01)
    finally:
        httpd.shutdown()
        httpd.server_close()
    assert _FlakyHandler.calls == 2
    assert report.failures == 1
    assert report.batches_sent == 1
    assert report.events_accepted == 5
    assert report.events_rejected == 1
