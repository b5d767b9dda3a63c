"""Benchmark the compiled kernels against the numpy fallbacks.

Usage: python benchmarks/bench_kernels.py [--repeats N]

Covers the two hot loops: the per-axis split scan that dominates tree
fitting inside the boosting loop, and the interval-overlap accumulation
behind the occupation measure.  Also times an end-to-end fit on simulated
queue data with each backend.
"""

import argparse
import importlib
import os
import subprocess
import sys
import time

import numpy as np

from hazboost._kernels import _pure

try:
    from hazboost._kernels import _core
except ImportError:
    _core = None


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_split_scan(repeats):
    rng = np.random.default_rng(0)
    rows = []
    for n_cells, n_codes in ((150, 25), (450, 75), (5000, 75), (50000, 200)):
        codes = rng.integers(0, n_codes, n_cells).astype(np.int64)
        w = rng.uniform(0.0, 1.0, n_cells)
        wy = w * rng.normal(0, 1, n_cells)

        def run(mod):
            def body():
                for _ in range(100):
                    mod.scan_axis_splits(codes, w, wy, n_codes)

            return timeit(body, repeats) / 100

        t_py = run(_pure)
        t_cy = run(_core) if _core else float("nan")
        rows.append(("split_scan", f"{n_cells}x{n_codes}", t_py, t_cy))
    return rows


def bench_overlap(repeats):
    rng = np.random.default_rng(1)
    rows = []
    for n_seg, n_time in ((2000, 25), (20000, 75), (200000, 75)):
        t0 = rng.uniform(0, 0.9, n_seg)
        t1 = t0 + rng.uniform(0.01, 1.0 - t0)
        cov = rng.integers(0, 6, n_seg).astype(np.int64)
        edges = np.linspace(0.0, 1.0, n_time + 1)

        def run(mod):
            def body():
                out = np.zeros((6, n_time))
                mod.accumulate_overlap(t0, t1, cov, edges, out)

            return timeit(body, repeats)

        t_py = run(_pure)
        t_cy = run(_core) if _core else float("nan")
        rows.append(("overlap", f"{n_seg}x{n_time}", t_py, t_cy))
    return rows


def bench_end_to_end(repeats):
    """Full fit on simulated data, toggling the backend via the environment."""
    script = (
        "import time, hazboost as hb\n"
        "data, _ = hb.simulate(hb.SimConfig(seed=3, completions=2000))\n"
        "axes = [hb.AxisSpec.uniform(50), hb.AxisSpec.midpoints(), hb.AxisSpec.midpoints()]\n"
        "grid = hb.build_grid(axes, data)\n"
        "t0 = time.perf_counter()\n"
        "hb.fit(data, grid, max_splits=3, iters=150)\n"
        "print(hb.kernel_backend, time.perf_counter() - t0)\n"
    )
    rows = []
    for pure in ("0", "1"):
        env = dict(os.environ, HAZBOOST_PURE_PYTHON=pure)
        best = float("inf")
        backend = "?"
        for _ in range(repeats):
            out = subprocess.run(
                [sys.executable, "-c", script], env=env, capture_output=True, text=True
            )
            backend, secs = out.stdout.split()
            best = min(best, float(secs))
        rows.append(("fit_150_iters", backend, best))
    return rows


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if _core is None:
        print("compiled core not available; showing fallback timings only\n")

    print(f"{'kernel':<14}{'size':<14}{'python':>12}{'cython':>12}{'speedup':>10}")
    for kernel, size, t_py, t_cy in bench_split_scan(args.repeats) + bench_overlap(
        args.repeats
    ):
        ratio = t_py / t_cy if t_cy == t_cy else float("nan")
        print(f"{kernel:<14}{size:<14}{t_py * 1e6:>10.1f}us{t_cy * 1e6:>10.1f}us{ratio:>9.1f}x")

    print("\nend-to-end (2000 subjects, 50 time divisions, 150 iterations):")
    for name, backend, secs in bench_end_to_end(max(2, args.repeats // 2)):
        print(f"  {name} [{backend:>7}]: {secs:.3f}s")


if __name__ == "__main__":
    main()
