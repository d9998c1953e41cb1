"""Benchmark the hot geometry kernels: numba backend vs pure-numpy fallback.

Imports both implementations directly (the SCAFFOLD_NUMBA env flag only
controls which one the library selects), warms the JIT, then times each on
workloads shaped like the real pipeline: coverage-cost distance batches,
mask rasterization parity tests, and z-buffer triangle fill.

Run: python benchmarks/bench_kernels.py [--points 200000] [--repeat 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from clipscaffold._kernels import numpy_impl

try:
    from clipscaffold._kernels import numba_impl
except ImportError:
    numba_impl = None


def star_polygon(rng, n_vertices=64):
    angles = np.sort(rng.uniform(0, 2 * np.pi, n_vertices))
    radii = rng.uniform(0.2, 0.45, n_vertices)
    return np.column_stack([0.5 + radii * np.cos(angles), 0.5 + radii * np.sin(angles)])


def bench(fn, *args, repeat=5):
    best = np.inf
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--points", type=int, default=200_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(11)
    poly = star_polygon(rng)
    pts2 = rng.uniform(-0.2, 1.2, (args.points, 2))
    pts3 = np.column_stack([pts2, rng.uniform(-1, 1, args.points)])

    tri_count = 2000
    uv = rng.uniform(0, 512, (tri_count, 3, 2))
    depth = rng.uniform(-1, 1, (tri_count, 3))
    owner = np.arange(tri_count, dtype=np.int32) % 17

    def raster_args():
        return (
            uv,
            depth,
            owner,
            512,
            512,
            np.full((512, 512), -np.inf),
            np.full((512, 512), -1, dtype=np.int32),
        )

    cases = [
        ("polygon_edge_distance", lambda impl: impl.polygon_edge_distance(pts2, poly)),
        ("polygon_parity", lambda impl: impl.polygon_parity(pts2, poly)),
        ("prism_distances", lambda impl: impl.prism_distances(pts3, poly, 0.1, 0.4)),
        ("fill_triangles", lambda impl: impl.fill_triangles(*raster_args())),
    ]

    print(f"{'kernel':<24} {'numpy':>10} {'numba':>10} {'speedup':>9}")
    for name, runner in cases:
        t_np = bench(runner, numpy_impl, repeat=args.repeat)
        if numba_impl is None:
            print(f"{name:<24} {t_np * 1e3:>8.1f}ms {'n/a':>10} {'n/a':>9}")
            continue
        runner(numba_impl)  # JIT warmup
        t_nb = bench(runner, numba_impl, repeat=args.repeat)
        print(f"{name:<24} {t_np * 1e3:>8.1f}ms {t_nb * 1e3:>8.1f}ms {t_np / t_nb:>8.1f}x")

    # agreement spot check
    if numba_impl is not None:
        a = numpy_impl.prism_distances(pts3, poly, 0.1, 0.4)
        b = numba_impl.prism_distances(pts3, poly, 0.1, 0.4)
        print(f"\nmax |numpy - numba| over {args.points} prism distances: {np.abs(a - b).max():g}")


if __name__ == "__main__":
    main()
