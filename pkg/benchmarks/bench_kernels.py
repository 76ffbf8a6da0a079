"""Time the compiled kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import time

import numpy as np

from pelve_lab import _kernels
from pelve_lab._jit import JIT_ENABLED
from pelve_lab.calib_point import build_two_point_quantile, classify_two_point


def _best(fn, repeat):
    fn()  # warm up (compilation)
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    curve = build_two_point_quantile(classify_two_point(0.01, 3.0, 0.05, 1.5)).curve
    S, F, extra = curve.S, curve.F, curve._args
    eps = np.geomspace(1e-4, 0.3, 200)

    def pelve_with(func):
        return lambda: [func(S, F, *extra, e, 1e-10, 200) for e in eps]

    x = np.random.default_rng(0).random(200_000)
    rows = [("piecewise PELVE x200", pelve_with(_kernels.pw_pelve_jit), pelve_with(_kernels.pw_pelve_np)),
            ("cantor x2e5", lambda: _kernels.cantor_jit(x), lambda: _kernels.cantor_np(x)),
            ("cantor integral x2e5", lambda: _kernels.cantor_integral_jit(x), lambda: _kernels.cantor_integral_np(x))]
    print(f"numba available: {JIT_ENABLED}")
    print(f"{'kernel':<24}{'jit [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name, jit_fn, np_fn in rows:
        tj, tn = _best(jit_fn, args.repeat), _best(np_fn, args.repeat)
        print(f"{name:<24}{tj * 1e3:>12.2f}{tn * 1e3:>12.2f}{tn / tj:>10.1f}")


if __name__ == "__main__":
    main()
