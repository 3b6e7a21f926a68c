"""Benchmark the jitted kernels against the pure-numpy fallback.

Times the two hot kernels (segment occlusion test, capsule silhouette
extents) on a synthetic workload sized like a busy generated frame, and
verifies on the way that both backends return identical results.

Run:  python benchmarks/bench_kernels.py [--rounds 5]
"""

import argparse
import time

import numpy as np

from synthpose.kernels import numpy_backend

try:
    from synthpose.kernels import numba_backend
except ImportError:
    numba_backend = None


def make_workload(seed: int = 7):
    rng = np.random.Generator(np.random.PCG64(seed))
    n_humans = 8
    spheres = np.column_stack([
        rng.uniform(-3, 3, size=(4, 3)), rng.uniform(0.2, 0.6, size=(4, 1))
    ]).astype(np.float64)
    n_caps = 18 * n_humans + 3
    a = rng.uniform(-3, 3, size=(n_caps, 3))
    b = a + rng.uniform(-0.5, 0.5, size=(n_caps, 3))
    r = rng.uniform(0.05, 0.15, size=(n_caps, 1))
    capsules = np.column_stack([a, b, r])
    caps_owner = np.repeat(np.arange(n_humans + 1) - 1,
                           [3] + [18] * n_humans).astype(np.int64)
    caps_joints = rng.integers(0, 17, size=(n_caps, 2)).astype(np.int64)
    boxes = []
    for _ in range(2):
        center = rng.uniform(-3, 3, size=3)
        theta = rng.uniform(0, 2 * np.pi)
        rot = np.array([
            [np.cos(theta), 0.0, -np.sin(theta)],
            [0.0, 1.0, 0.0],
            [np.sin(theta), 0.0, np.cos(theta)],
        ])
        half = rng.uniform(0.2, 0.8, size=3)
        boxes.append(np.concatenate([center, rot.ravel(), half]))
    boxes = np.asarray(boxes)

    cam = np.array([8.0, 4.0, 8.0])
    targets = rng.uniform(-2, 2, size=(2000, 3))
    caps_view = np.column_stack([
        rng.uniform(-2, 2, size=(144, 3)),
        rng.uniform(-2, 2, size=(144, 3)),
        rng.uniform(0.05, 0.15, size=(144, 1)),
    ])
    caps_view[:, 2] = np.abs(caps_view[:, 2]) + 4.0  # keep in front
    caps_view[:, 5] = np.abs(caps_view[:, 5]) + 4.0
    return {
        "spheres": spheres, "capsules": capsules, "caps_owner": caps_owner,
        "caps_joints": caps_joints, "boxes": boxes, "cam": cam,
        "targets": targets, "caps_view": caps_view,
    }


def run_segments(backend, w):
    cam = w["cam"]
    hits = 0
    for t in w["targets"]:
        hits += backend.segment_blocked(
            cam[0], cam[1], cam[2], t[0], t[1], t[2], 1e-6, 1.0 - 1e-6,
            w["spheres"], w["capsules"], w["caps_owner"], w["caps_joints"],
            w["boxes"], -2, -2)
    return hits


def run_extents(backend, w):
    total = 0.0
    for _ in range(50):
        out = backend.capsule_union_extents(
            w["caps_view"], 64, 554.0, 554.0, 320.0, 240.0, 640.0, 480.0)
        total += out[1] + out[2]
    return total


def time_callable(fn, rounds):
    best = float("inf")
    for _ in range(rounds):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rounds", type=int, default=5)
    args = parser.parse_args()

    w = make_workload()
    rows = []
    for name, task in (("segment_blocked x2000", run_segments),
                       ("capsule_union_extents x50", run_extents)):
        np_time, np_result = time_callable(lambda: task(numpy_backend, w),
                                           args.rounds)
        if numba_backend is not None:
            task(numba_backend, w)  # trigger JIT outside the timed region
            nb_time, nb_result = time_callable(
                lambda: task(numba_backend, w), args.rounds)
            assert np_result == nb_result, (name, np_result, nb_result)
            rows.append((name, np_time, nb_time))
        else:
            rows.append((name, np_time, None))

    print(f"{'kernel':<28} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for name, np_time, nb_time in rows:
        if nb_time is None:
            print(f"{name:<28} {np_time * 1e3:>8.2f}ms {'n/a':>10} {'':>8}")
        else:
            print(f"{name:<28} {np_time * 1e3:>8.2f}ms "
                  f"{nb_time * 1e3:>8.2f}ms {np_time / nb_time:>7.1f}x")


if __name__ == "__main__":
    main()
