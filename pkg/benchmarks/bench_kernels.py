"""Compare the numba kernel path against the pure-numpy fallback.

Runs each kernel on both paths and prints per-call timings plus the speedup.
The numpy path is selected by reimporting the kernels module with
SSKGQA_DISABLE_NUMBA=1 in a subprocess-free way: both implementations are
importable directly, so we call them side by side here.

Usage: python3 benchmarks/bench_kernels.py [--size N] [--repeat R]
"""

import argparse
import time

import numpy as np

from sskgqa import kernels


def timeit(fn, args, repeat):
    fn(*args)  # warmup (triggers jit compilation on the numba path)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=2000, help="matrix rows")
    ap.add_argument("--cols", type=int, default=256, help="matrix columns (even)")
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    n, d = args.size, args.cols
    x = rng.normal(size=(n, d))
    y = kernels._softmax_rows_np(x)
    g = rng.normal(size=(n, d))
    a = rng.normal(size=(n, d))
    b = rng.normal(size=(n, d))

    cases = [
        ("softmax_rows", kernels.softmax_rows, kernels._softmax_rows_np, (x,)),
        (
            "softmax_rows_backward",
            kernels.softmax_rows_backward,
            kernels._softmax_rows_backward_np,
            (y, g),
        ),
        (
            "complex_mul_packed",
            kernels.complex_mul_packed,
            kernels._complex_mul_packed_np,
            (a, b),
        ),
    ]

    print(f"arrays: ({n}, {d}); best of {args.repeat} runs")
    print(f"numba available and enabled: {kernels.USE_NUMBA}")
    header = f"{'kernel':24s} {'active path':>12s} {'numpy path':>12s} {'speedup':>8s}"
    print(header)
    print("-" * len(header))
    for name, active, fallback, call_args in cases:
        t_active = timeit(active, call_args, args.repeat)
        t_np = timeit(fallback, call_args, args.repeat)
        print(
            f"{name:24s} {t_active * 1e3:10.3f}ms {t_np * 1e3:10.3f}ms "
            f"{t_np / t_active:7.2f}x"
        )

    # adamw_update and scale_inplace mutate their inputs; bench on copies
    p = rng.normal(size=(n, d))
    grad = rng.normal(size=(n, d))
    m = np.zeros_like(p)
    v = np.zeros_like(p)

    def adamw_active():
        kernels.adamw_update(p.copy(), grad, m.copy(), v.copy(), 1, 1e-3, 0.9, 0.999, 1e-8, 0.0)

    def adamw_np():
        kernels._adamw_update_np(p.copy(), grad, m.copy(), v.copy(), 1, 1e-3, 0.9, 0.999, 1e-8, 0.0)

    t_active = timeit(lambda: adamw_active(), (), args.repeat)
    t_np = timeit(lambda: adamw_np(), (), args.repeat)
    print(
        f"{'adamw_update':24s} {t_active * 1e3:10.3f}ms {t_np * 1e3:10.3f}ms "
        f"{t_np / t_active:7.2f}x  (includes copy overhead)"
    )


if __name__ == "__main__":
    main()
