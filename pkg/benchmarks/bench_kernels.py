"""Time the numba kernels against their pure-numpy twins.

Run from the repo root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --users 26 --frames 2000 --repeats 7

The numba path is warmed before timing so compilation does not count.
Distances and grids must agree bitwise between backends; angles may differ
by a couple of ulp, checked here too.
"""

import argparse
import statistics
import time

import numpy as np

from proxilog import _kernels as k


def _median_time(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return statistics.median(times)


def _row(name, numpy_s, numba_s):
    speedup = numpy_s / numba_s if numba_s > 0 else float("inf")
    print(f"{name:<22} numpy {numpy_s * 1e3:9.2f} ms   numba {numba_s * 1e3:9.2f} ms   x{speedup:5.1f}")


def bench_pairwise(rng, users, frames, repeats):
    batches = []
    for _ in range(frames):
        positions = rng.uniform((0, 0, 0), (70, 5, 40), size=(users, 3))
        directions = rng.normal(size=(users, 3))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        batches.append((positions, directions))

    k.pairwise_numba(*batches[0])  # compile outside the timer

    for positions, directions in batches[:10]:
        dist_np, ang_np = k.pairwise_numpy(positions, directions)
        dist_nb, ang_nb = k.pairwise_numba(positions, directions)
        assert np.array_equal(dist_np, dist_nb)
        finite = ~np.isnan(ang_np)
        ulps = np.abs(
            ang_np[finite].view(np.int64) - ang_nb[finite].view(np.int64)
        )
        assert ulps.max(initial=0) <= 2

    numpy_s = _median_time(lambda: [k.pairwise_numpy(p, d) for p, d in batches], repeats)
    numba_s = _median_time(lambda: [k.pairwise_numba(p, d) for p, d in batches], repeats)
    _row(f"pairwise {users}x{frames}", numpy_s, numba_s)


def bench_grids(rng, samples, repeats):
    xs = rng.uniform(-2, 72, samples)
    zs = rng.uniform(-2, 42, samples)
    dxs = rng.normal(size=samples)
    dzs = rng.normal(size=samples)

    k.grid_counts_numba(xs, zs, 1.0, 40, 70)
    k.grid_direction_sums_numba(xs, zs, dxs, dzs, 1.0, 40, 70)

    counts_np, clip_np = k.grid_counts_numpy(xs, zs, 1.0, 40, 70)
    counts_nb, clip_nb = k.grid_counts_numba(xs, zs, 1.0, 40, 70)
    assert np.array_equal(counts_np, counts_nb) and clip_np == clip_nb
    sums_np = k.grid_direction_sums_numpy(xs, zs, dxs, dzs, 1.0, 40, 70)
    sums_nb = k.grid_direction_sums_numba(xs, zs, dxs, dzs, 1.0, 40, 70)
    for a, b in zip(sums_np, sums_nb):
        assert np.array_equal(a, b)

    numpy_s = _median_time(lambda: k.grid_counts_numpy(xs, zs, 1.0, 40, 70), repeats)
    numba_s = _median_time(lambda: k.grid_counts_numba(xs, zs, 1.0, 40, 70), repeats)
    _row(f"grid_counts {samples}", numpy_s, numba_s)

    numpy_s = _median_time(
        lambda: k.grid_direction_sums_numpy(xs, zs, dxs, dzs, 1.0, 40, 70), repeats
    )
    numba_s = _median_time(
        lambda: k.grid_direction_sums_numba(xs, zs, dxs, dzs, 1.0, 40, 70), repeats
    )
    _row(f"direction_sums {samples}", numpy_s, numba_s)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--users", type=int, default=26)
    parser.add_argument("--frames", type=int, default=2000)
    parser.add_argument("--samples", type=int, default=1_000_000)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    if not k.HAS_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")

    rng = np.random.default_rng(args.seed)
    print(f"active backend: {k.backend_name()} (benchmark always times both)")
    bench_pairwise(rng, args.users, args.frames, args.repeats)
    bench_grids(rng, args.samples, args.repeats)


if __name__ == "__main__":
    main()
