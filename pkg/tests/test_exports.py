"""CSV export round trips. Floats must survive exactly via repr formatting."""

import io
import math

import numpy as np
import pytest

from conftest import make_pose, store_from_frames, unit
from fixtures import NN_KEYNOTE, NN_ROOM_A
from proxilog.engine import (
    ZoneHistogram,
    detect_groups,
    nearest_neighbour_series,
    occupancy,
    pairwise,
    quiver,
    zone_histogram,
)
from proxilog.exports import (
    clusters_to_csv,
    frames_to_csv,
    grid_to_csv,
    histograms_to_csv,
    nn_to_csv,
    pairwise_to_csv,
    quiver_to_csv,
    read_grid_csv,
    read_histograms_csv,
    read_quiver_csv,
)
from proxilog.model import RoomGeometry

ROOM = RoomGeometry(room_id="r", bounds_x=20.0, bounds_z=10.0)


def test_pairwise_csv_shape():
    poses = {
        "a": make_pose("a", (0.0, 0.0, 0.0), (1.0, 0.0, 0.0)),
        "b": make_pose("b", (3.0, 0.0, 4.0), (0.0, 0.0, 1.0)),
        "c": make_pose("c", (6.0, 0.0, 8.0), (0.0, 1.0, 0.0)),
    }
    text = pairwise_to_csv([pairwise(poses, frame=7)])
    lines = text.strip().splitlines()
    assert lines[0] == "frame,i,j,distance,angle"
    assert len(lines) == 1 + 6  # ordered pairs, no diagonal
    first = lines[1].split(",")
    assert first[:3] == ["7", "a", "b"]
    assert float(first[3]) == 5.0


def test_pairwise_csv_floats_exact():
    rng = np.random.default_rng(71)
    poses = {
        f"u{i}": make_pose(f"u{i}", tuple(rng.uniform(0, 9, 3)), unit(*rng.normal(size=3)))
        for i in range(5)
    }
    mats = pairwise(poses)
    rows = pairwise_to_csv([mats]).strip().splitlines()[1:]
    idx = {u: k for k, u in enumerate(mats.users)}
    for row in rows:
        _, ui, uj, dist, angle = row.split(",")
        assert float(dist) == mats.distance[idx[ui], idx[uj]]
        got = float(angle)
        want = mats.angle[idx[ui], idx[uj]]
        assert got == want or (math.isnan(got) and math.isnan(want))


def test_nn_csv_round_trip_values():
    frames = {k: {"a": (0.0, 0.0, 0.0), "b": (1.25, 0.0, 0.0)} for k in range(3)}
    samples = nearest_neighbour_series(store_from_frames(frames))
    lines = nn_to_csv(samples).strip().splitlines()
    assert lines[0] == "frame,user_id,distance"
    assert len(lines) == 7
    for line, sample in zip(lines[1:], samples):
        frame, user, dist = line.split(",")
        assert (int(frame), user, float(dist)) == (sample.frame, sample.user_id, sample.distance)


def test_histogram_csv_single_series_round_trip():
    hist = zone_histogram(list(np.random.default_rng(73).uniform(0, 6, 300)))
    text = histograms_to_csv([hist])
    assert text.splitlines()[0] == "bin_lo,bin_hi,count,probability"
    back = read_histograms_csv(io.StringIO(text))
    assert len(back) == 1
    label, got = back[0]
    assert label == ""
    assert np.array_equal(got.counts, hist.counts)
    assert np.array_equal(got.probabilities, hist.probabilities)
    assert got.bin_width == hist.bin_width and got.range_max == hist.range_max


def test_histogram_csv_fixture_pair_exact():
    a = ZoneHistogram.from_values(NN_ROOM_A)
    b = ZoneHistogram.from_values(NN_KEYNOTE)
    text = histograms_to_csv([a, b], labels=["room_a", "keynote"])
    assert text.splitlines()[0] == (
        "bin_lo,bin_hi,count_room_a,probability_room_a,count_keynote,probability_keynote"
    )
    back = read_histograms_csv(io.StringIO(text))
    assert [label for label, _ in back] == ["room_a", "keynote"]
    # byte-exact float round trip, not approx
    assert list(back[0][1].probabilities) == list(NN_ROOM_A)
    assert list(back[1][1].probabilities) == list(NN_KEYNOTE)


def test_histogram_csv_rejects_mismatched_bins():
    a = zone_histogram([1.0])
    b = zone_histogram([1.0], bin_width=0.5)
    with pytest.raises(ValueError):
        histograms_to_csv([a, b])
    with pytest.raises(ValueError):
        histograms_to_csv([a], labels=["x", "y"])
    with pytest.raises(ValueError):
        histograms_to_csv([])


def test_grid_csv_round_trip():
    rng = np.random.default_rng(79)
    frames = {
        k: {f"u{i}": tuple(rng.uniform((0, 0, 0), (20, 2, 10))) for i in range(4)}
        for k in range(25)
    }
    grid = occupancy(store_from_frames(frames), ROOM)
    text = grid_to_csv(grid)
    lines = text.strip().splitlines()
    assert lines[0] == "row,col,count"
    assert len(lines) == 1 + grid.counts.size  # every cell, zeros included
    back = read_grid_csv(io.StringIO(text))
    assert back.shape == grid.counts.shape
    assert np.array_equal(back, grid.counts)


def test_quiver_csv_round_trip_defined_only():
    frames = {
        0: {"a": ((0.5, 0.0, 0.5), (1.0, 0.0, 0.0))},
        1: {"a": ((0.5, 0.0, 0.5), (0.0, 0.0, 1.0))},
        2: {"b": ((5.5, 0.0, 5.5), (-1.0, 0.0, 0.0))},
    }
    field = quiver(store_from_frames(frames), ROOM)
    text = quiver_to_csv(field)
    lines = text.strip().splitlines()
    assert lines[0] == "row,col,dx,dz,magnitude"
    assert len(lines) == 1 + int(field.defined.sum())
    direction, magnitude, defined = read_quiver_csv(io.StringIO(text), field.counts.shape)
    assert np.array_equal(defined, field.defined)
    assert np.array_equal(magnitude[defined], field.magnitude[defined])
    assert np.array_equal(direction[defined], field.direction[defined])


def test_quiver_csv_reader_rejects_out_of_range():
    text = "row,col,dx,dz,magnitude\n9,9,1.0,0.0,1.0\n"
    with pytest.raises(ValueError):
        read_quiver_csv(io.StringIO(text), (5, 5))


def test_clusters_csv():
    poses = {
        "a": make_pose("a", (0.0, 0.0, 0.0)),
        "b": make_pose("b", (0.5, 0.0, 0.0)),
        "lone": make_pose("lone", (9.0, 0.0, 9.0)),
    }
    clusters, noise = detect_groups(poses)
    from proxilog.engine import FrameClusters

    lines = clusters_to_csv([FrameClusters(0, clusters, noise)]).strip().splitlines()
    assert lines[0] == "frame,cluster_id,user_id"
    assert "0,0,a" in lines and "0,0,b" in lines
    assert "0,-1,lone" in lines


def test_frames_csv_round_trip():
    rng = np.random.default_rng(83)
    frames = {}
    for k in range(4):
        frames[k] = {
            f"u{i}": (tuple(rng.uniform(0, 9, 3)), unit(*rng.normal(size=3)))
            for i in range(3)
        }
    store = store_from_frames(frames)
    lines = frames_to_csv(store).strip().splitlines()
    assert lines[0] == "frame,user_id,x,y,z,dx,dy,dz,source_ts"
    assert len(lines) == 1 + store.pose_count()
    row = lines[1].split(",")
    pose = store.frames[0][row[1]]
    assert (float(row[2]), float(row[3]), float(row[4])) == pose.position
    assert (float(row[5]), float(row[6]), float(row[7])) == pose.direction
    assert int(row[8]) == pose.source_ts
