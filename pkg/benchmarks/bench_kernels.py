"""Benchmark the compiled kernels against the numpy fallback.

Run:  python3 benchmarks/bench_kernels.py [--repeat N]

Shapes mirror the training hot path: batched conv patch gather/scatter on
voxel grids and depth images, plus point-cloud voxelization.
"""

import argparse
import time

import numpy as np

from voxpick._kernels import _native, fallback  # type: ignore[attr-defined]
from voxpick.sensing import GridSpec


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    spec = GridSpec()
    cases = []

    grids = rng.random((16, 50, 50, 40, 1)).astype(np.float32)
    cases.append(("im2col3d 16x(50,50,40) k5 s3",
                  lambda m: m.im2col3d(grids, 5, 5, 5, 3, 3, 3)))
    cols3 = _native.im2col3d(grids, 5, 5, 5, 3, 3, 3)
    gcols3 = rng.random(cols3.shape).astype(np.float32)
    cases.append(("col2im3d same",
                  lambda m: m.col2im3d(gcols3, 50, 50, 40, 5, 5, 5, 3, 3, 3)))

    imgs = rng.random((16, 128, 128, 2)).astype(np.float32)
    cases.append(("im2col2d 16x(128,128,2) k8 s4",
                  lambda m: m.im2col2d(imgs, 8, 8, 4, 4)))
    cols2 = _native.im2col2d(imgs, 8, 8, 4, 4)
    gcols2 = rng.random(cols2.shape).astype(np.float32)
    cases.append(("col2im2d same",
                  lambda m: m.col2im2d(gcols2, 128, 128, 8, 8, 4, 4)))

    pts = rng.uniform(-0.06, 0.06, (20000, 3))
    origin = np.asarray(spec.origin)
    cases.append(("voxelize 20k points",
                  lambda m: m.voxelize_points(
                      np.ascontiguousarray(pts), origin, spec.voxel_size, *spec.shape)))

    print(f"{'kernel':36s} {'native':>9s} {'numpy':>9s} {'speedup':>8s}  match")
    for name, fn in cases:
        t_nat, out_nat = timeit(lambda: fn(_native), args.repeat)
        t_np, out_np = timeit(lambda: fn(fallback), args.repeat)
        exact = np.array_equal(out_nat, out_np)
        close = exact or np.allclose(out_nat, out_np, rtol=1e-5, atol=1e-6)
        tag = "exact" if exact else ("close" if close else "MISMATCH")
        print(f"{name:36s} {t_nat*1e3:7.1f}ms {t_np*1e3:7.1f}ms {t_np/t_nat:7.2f}x  {tag}")


if __name__ == "__main__":
    main()
