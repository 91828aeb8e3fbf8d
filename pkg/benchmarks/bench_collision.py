"""Benchmark the compiled collision kernel against the pure-numpy fallback.

Usage:
    python3 benchmarks/bench_collision.py [--points N] [--poses M] [--reps R]

Builds a synthetic workload (random point cloud, the default robot's
cylinder set, random poses) and times ``poses_valid`` for both backends.
The compiled backend is skipped with a notice when the extension is not
built.
"""

import argparse
import math
import statistics
import time

import numpy as np

from alphasurvey import _collision_py
from alphasurvey.geometry import default_robot_model

try:
    from alphasurvey import _collision
except ImportError:
    _collision = None


def make_workload(n_points: int, n_poses: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    points = np.column_stack([
        rng.uniform(-5.0, 5.0, n_points),
        rng.uniform(-5.0, 5.0, n_points),
        rng.uniform(0.0, 1.2, n_points)])
    poses = np.column_stack([
        rng.uniform(-4.0, 4.0, n_poses),
        rng.uniform(-4.0, 4.0, n_poses),
        rng.uniform(0.0, 2.0 * math.pi, n_poses)])
    cylinders = default_robot_model()._cyl_array
    return points, cylinders, poses


def bench(fn, points, cylinders, poses, reps: int) -> list[float]:
    fn(points, cylinders, poses)  # warm up
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn(points, cylinders, poses)
        times.append(time.perf_counter() - t0)
    return times


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--points", type=int, default=10_000)
    parser.add_argument("--poses", type=int, default=5_000)
    parser.add_argument("--reps", type=int, default=5)
    args = parser.parse_args()

    points, cylinders, poses = make_workload(args.points, args.poses)
    print(f"workload: {args.points} points x {args.poses} poses x "
          f"{cylinders.shape[0]} cylinders, best of {args.reps}")

    py_times = bench(_collision_py.poses_valid, points, cylinders, poses,
                     args.reps)
    py_best = min(py_times)
    print(f"pure python : best {py_best * 1e3:8.2f} ms  "
          f"median {statistics.median(py_times) * 1e3:8.2f} ms")

    if _collision is None:
        print("compiled    : extension not built, skipping")
        return
    c_times = bench(_collision.poses_valid, points, cylinders, poses,
                    args.reps)
    c_best = min(c_times)
    print(f"compiled    : best {c_best * 1e3:8.2f} ms  "
          f"median {statistics.median(c_times) * 1e3:8.2f} ms")
    print(f"speedup     : {py_best / c_best:.1f}x")

    same = np.array_equal(
        _collision_py.poses_valid(points, cylinders, poses),
        _collision.poses_valid(points, cylinders, poses))
    print(f"bit-identical results: {same}")


if __name__ == "__main__":
    main()
