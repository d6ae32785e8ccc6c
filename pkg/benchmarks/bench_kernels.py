"""Timing comparison of the numba and numpy kernel backends.

Micro-benchmarks call both implementations directly; the end-to-end rollout
re-launches this script in a subprocess with SSDLAB_KERNELS set, because the
backend is chosen once at import time.

Usage: python benchmarks/bench_kernels.py [--steps 2000] [--repeats 5]
"""

import argparse
import os
import statistics
import subprocess
import sys
import time

import numpy as np

from ssdlab import kernels


def timeit(fn, repeats):
    best = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best.append(time.perf_counter() - t0)
    return statistics.median(best)


def micro_benchmarks(repeats):
    try:
        from numba import njit
    except ImportError:
        print("numba not importable; skipping micro-benchmarks")
        return
    counts_jit = njit(cache=True)(kernels._l1_neighbor_counts_loop)
    window_jit = njit(cache=True)(kernels._extract_window_loop)

    rng = np.random.default_rng(0)
    mask = (rng.random((25, 18)) < 0.3).astype(np.int64)
    codes = rng.integers(0, 9, size=(25, 18), dtype=np.int64)

    # warm up the JIT before timing
    counts_jit(mask, 2)
    window_jit(codes, 10, 10, 1, 15, 15, 11, 7, 1)

    cases = [
        ("l1_neighbor_counts 25x18 r=2 x1000",
         lambda: [counts_jit(mask, 2) for _ in range(1000)],
         lambda: [kernels._l1_neighbor_counts_numpy(mask, 2) for _ in range(1000)]),
        ("extract_window 15x15 x10000",
         lambda: [window_jit(codes, 10, 10, o % 4, 15, 15, 11, 7, 1)
                  for o in range(10000)],
         lambda: [kernels._extract_window_numpy(codes, 10, 10, o % 4, 15, 15, 11, 7, 1)
                  for o in range(10000)]),
    ]
    print(f"{'kernel':42s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s}")
    for name, jit_fn, np_fn in cases:
        t_jit = timeit(jit_fn, repeats)
        t_np = timeit(np_fn, repeats)
        print(f"{name:42s} {t_jit*1e3:8.1f}ms {t_np*1e3:8.1f}ms {t_np/t_jit:7.1f}x")

    got_jit = counts_jit(mask, 2)
    got_np = kernels._l1_neighbor_counts_numpy(mask, 2)
    assert np.array_equal(got_jit, got_np), "backends disagree"


def rollout(steps):
    """Run random play on the default harvest map; prints steps/second."""
    from ssdlab import make_env

    env = make_env("harvest")
    env.reset(seed=0)
    rng = np.random.default_rng(0)
    n = env.n_agents
    t0 = time.perf_counter()
    done_resets = 0
    for _ in range(steps):
        result = env.step(rng.integers(0, 7, size=n))
        env.observations()
        if result.done:
            env.reset(seed=done_resets)
            done_resets += 1
    dt = time.perf_counter() - t0
    print(f"backend={kernels.BACKEND:5s} {steps} env steps in {dt:.2f}s "
          f"({steps/dt:,.0f} steps/s)")


def rollout_subprocess(backend, steps):
    env = dict(os.environ, SSDLAB_KERNELS=backend)
    subprocess.run([sys.executable, __file__, "--rollout", "--steps", str(steps)],
                   env=env, check=True)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=2000)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--rollout", action="store_true",
                        help="internal: time a rollout with the current backend")
    args = parser.parse_args()

    if args.rollout:
        rollout(args.steps)
        return

    micro_benchmarks(args.repeats)
    print()
    for backend in ("numba", "numpy"):
        rollout_subprocess(backend, args.steps)


if __name__ == "__main__":
    main()
