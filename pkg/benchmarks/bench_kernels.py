"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5]

Each row reports the best wall time per backend and whether the two outputs
agree. Numba is warmed up once before timing, so compile cost is excluded.
"""

import argparse
import timeit

import numpy as np

from intrinsic_lab import _kernels
from intrinsic_lab._rng import shard_generator
from intrinsic_lab.convex_bodies import ball_intrinsic_volumes
from intrinsic_lab.superconv import cube_family


def cases():
    rng = shard_generator(2024)
    a = ball_intrinsic_volumes(400, 20.0).logv
    b = ball_intrinsic_volumes(300, 17.0).logv
    ts = np.linspace(-20, 20, 2001)
    table = cube_family(1.5, 60).table()
    pts = rng.uniform(-3, 3, size=(200_000, 3))
    c = np.zeros(3)
    lap = np.array([1.0, 0.0, np.log(2.0)])
    level = 3 * (1 + np.log(2.0) + 0.1)
    return {
        "log_convolve 401x301": lambda k: k.log_convolve(a, b),
        "log_generating 401x2001": lambda k: k.log_generating(a, ts),
        "superconv_margins n<=60": lambda k: k.superconv_margins(table, 60),
        "l1_distance 2e5x3": lambda k: k.l1_distance(pts, c, 2.0),
        "ball_distance 2e5x3": lambda k: k.ball_distance(pts, c, 2.0),
        "separable_distance laplace 2e5x3":
            lambda k: k.separable_distance(_kernels.PROX_LAPLACE, lap, pts, level),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels.numba_impl is None:
        print("numba unavailable; nothing to compare")
        return
    backends = (_kernels.numpy_impl, _kernels.numba_impl)
    print(f"{'kernel':36s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s}  agree")
    for name, fn in cases().items():
        outs = [fn(k) for k in backends]  # warm-up and compile
        agree = np.allclose(outs[0], outs[1], rtol=1e-10, atol=1e-12, equal_nan=True)
        best = [min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat)) * 1e3
                for k in backends]
        print(f"{name:36s} {best[0]:11.2f} {best[1]:11.2f} {best[0] / best[1]:8.1f}  {agree}")


if __name__ == "__main__":
    main()
