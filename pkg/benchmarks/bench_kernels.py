"""Benchmark the compiled pixel kernels against the numpy fallback.

Run: python benchmarks/bench_kernels.py [--repeat N]

Workloads mirror the pipeline's hot path: VGA downscale, 112x112 chip
warps, and enrollment-photo sharpening blurs.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from edgeattend.kernels import _pure

try:
    from edgeattend.kernels import _native
except ImportError:
    _native = None


def timeit(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    vga = rng.integers(0, 256, (480, 640, 3), np.uint8)
    crop = rng.integers(0, 256, (260, 260, 3), np.uint8)
    photo = rng.integers(0, 256, (300, 300, 3), np.uint8)
    inv = np.array([0.42, 0.05, 30.0, -0.05, 0.42, 20.0])

    workloads = [
        ("downscale 640x480 /2", lambda impl: impl.box_downscale(vga, 2.0)),
        ("downscale 640x480 /1.5", lambda impl: impl.box_downscale(vga, 1.5)),
        ("warp 260px -> 112px chip", lambda impl: impl.warp_affine(crop, inv, 112, 112)),
        ("gaussian blur 300px r=2", lambda impl: impl.gaussian_blur(photo, 2)),
    ]

    print(f"{'workload':<28}{'pure':>12}{'native':>12}{'speedup':>10}")
    for name, fn in workloads:
        t_pure = timeit(lambda: fn(_pure), args.repeat)
        if _native is None:
            print(f"{name:<28}{t_pure * 1e3:>10.2f}ms{'n/a':>12}{'':>10}")
            continue
        t_native = timeit(lambda: fn(_native), args.repeat)
        print(
            f"{name:<28}{t_pure * 1e3:>10.2f}ms{t_native * 1e3:>10.2f}ms"
            f"{t_pure / t_native:>9.1f}x"
        )
    if _native is None:
        print("\ncompiled extension not built; showing fallback timings only")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
