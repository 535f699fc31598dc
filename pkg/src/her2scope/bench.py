"""Benchmark the compiled kernels against the pure numpy fallbacks.

Run with ``python -m her2scope.bench [--size N] [--repeats K]``.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from .kernels import available_backends


def _time(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run(size: int = 1024, repeats: int = 3) -> dict[str, dict[str, float]]:
    rng = np.random.Generator(np.random.PCG64(7))
    channel = rng.random((size, size))
    yy, xx = np.mgrid[0:size, 0:size]
    rings = np.zeros((size, size), dtype=bool)
    for cy in range(40, size - 40, 80):
        for cx in range(40, size - 40, 80):
            d = np.hypot(yy - cy, xx - cx)
            rings |= np.abs(d - 24) < 3

    results: dict[str, dict[str, float]] = {}
    for name, impl in available_backends().items():
        results[name] = {
            "bilateral": _time(lambda: impl.bilateral(channel, 2.0, 0.2), repeats),
            "thinning": _time(lambda: impl.zhang_suen_thin(rings), repeats),
        }
    return results


def main(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(description="kernel backend benchmark")
    parser.add_argument("--size", type=int, default=1024)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args(argv)
    results = run(args.size, args.repeats)
    print(f"{'kernel':<12}" + "".join(f"{name + ' (s)':>14}" for name in results))
    for kernel in ("bilateral", "thinning"):
        row = f"{kernel:<12}"
        for name in results:
            row += f"{results[name][kernel]:>14.3f}"
        print(row)
    if {"pure", "native"} <= results.keys():
        for kernel in ("bilateral", "thinning"):
            speedup = results["pure"][kernel] / results["native"][kernel]
            print(f"{kernel}: native is {speedup:.1f}x faster")


if __name__ == "__main__":
    main()
