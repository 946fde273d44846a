#!/usr/bin/env python3
"""Times the compiled DP core against the pure-Python fallback.

Two workloads: single forward passes over random local-kernel matrices,
and a batch label-matrix job (the shape that dominates training runs).
Also asserts both backends return identical doubles.

Usage: python3 benchmarks/bench_backends.py [--repeats N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from triplegak import _dppy
from triplegak.backend import available_backends
from triplegak.core import KernelConfig, make_prefix_views
from triplegak.loss import label_matrix
from triplegak.synth import random_sequence


def time_fn(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_dp(repeats: int) -> None:
    from triplegak import _dpcore

    rng = np.random.default_rng(0)
    print(f"{'size':>10} {'python':>12} {'compiled':>12} {'speedup':>9}")
    for n in (8, 16, 32, 64, 128):
        kmat = np.ascontiguousarray(rng.uniform(0.05, 1.0, (n, n)))
        assert _dpcore.dp_forward(kmat) == _dppy.dp_forward(kmat)
        t_py = time_fn(lambda: _dppy.dp_forward(kmat), repeats)
        t_c = time_fn(lambda: _dpcore.dp_forward(kmat), repeats)
        print(f"{n:>7}x{n:<3} {t_py * 1e3:>10.3f}ms {t_c * 1e3:>10.3f}ms {t_py / t_c:>8.1f}x")


def bench_label_matrix(repeats: int) -> None:
    import os

    rng = np.random.default_rng(1)
    views = [
        make_prefix_views(random_sequence(rng, f"d{i}", 6), [6])[0]
        for i in range(24)
    ]
    cfg = KernelConfig(normalize_gak=True)

    timings = {}
    for side in ("python", "c"):
        # gak looks dp_forward up on the backend module at call time, so
        # reloading just that module flips the implementation
        os.environ["TRIPLEGAK_BACKEND"] = side
        import importlib

        import triplegak.backend

        importlib.reload(triplegak.backend)
        timings[side] = time_fn(lambda: label_matrix(views, cfg), repeats)
    os.environ.pop("TRIPLEGAK_BACKEND", None)
    importlib.reload(triplegak.backend)
    print(f"\nlabel matrix over 24 six-slice views: "
          f"python {timings['python'] * 1e3:.1f}ms, compiled {timings['c'] * 1e3:.1f}ms, "
          f"speedup {timings['python'] / timings['c']:.1f}x")


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    if "c" not in available_backends():
        print("compiled core not built; nothing to compare "
              "(pip install -e . --no-build-isolation builds it)")
        return
    bench_dp(args.repeats)
    bench_label_matrix(args.repeats)


if __name__ == "__main__":
    main()
