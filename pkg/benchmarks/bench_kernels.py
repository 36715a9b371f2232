"""Benchmark the hot kernels: numba jit path vs pure-numpy fallback.

Usage:  python benchmarks/bench_kernels.py [--repeat 3]

Times the Gaussian heat sums and the radial profile convolutions on a
representative workload (Cantor-type support, certification-sized point and
time grids).  The numba rows are skipped when numba is not importable.
"""

import argparse
import time

import numpy as np

from fracmeas import _kernels


def workload():
    rng = np.random.default_rng(1)
    y = np.ascontiguousarray(rng.uniform(0, 1, (1024, 1)))
    w = np.ascontiguousarray(rng.uniform(-1, 1, 1024))
    x = np.ascontiguousarray(np.sort(rng.uniform(-2, 3, 1500))[:, None])
    t = np.geomspace(1e-8, 64.0, 160)
    return x, y, w, t


def bench(fn, args, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    x, y, w, t = workload()
    pref = (4.0 * np.pi * t) ** -0.5
    r2max = 64.0 * t * np.log(1e12)
    s = np.sqrt(t)
    table = np.maximum(1.0 - np.arange(2048) / 1024.0, 0.0)

    heat_args = (x, y, w, t, pref, r2max)
    conv_args = (x, y, w, s, _kernels.KIND_GAUSS, 0.282, 1.0, table,
                 1.0 / 1024.0, 12.0)

    rows = []
    if _kernels.HAVE_NUMBA:
        _kernels._heat_values_numba(*heat_args)          # compile
        _kernels._radial_conv_numba(*conv_args)
        rows.append(("heat_values", "numba",
                     bench(_kernels._heat_values_numba, heat_args, args.repeat)))
        rows.append(("radial_conv", "numba",
                     bench(_kernels._radial_conv_numba, conv_args, args.repeat)))
    rows.append(("heat_values", "numpy",
                 bench(_kernels._heat_values_numpy, heat_args, args.repeat)))
    rows.append(("radial_conv", "numpy",
                 bench(_kernels._radial_conv_numpy, conv_args, args.repeat)))

    n_ops = x.shape[0] * y.shape[0] * len(t)
    print(f"workload: {x.shape[0]} points x {y.shape[0]} masses x {len(t)} "
          f"scales = {n_ops / 1e6:.0f}M pair-scale terms")
    print(f"{'kernel':<14}{'backend':<10}{'best (s)':<12}{'Mterms/s':<10}")
    base = {}
    for name, backend, sec in rows:
        base.setdefault(name, sec)
        speed = n_ops / sec / 1e6
        rel = base[name] / sec
        print(f"{name:<14}{backend:<10}{sec:<12.3f}{speed:<10.0f}"
              + (f"  ({1/rel:.1f}x slower)" if rel < 1 else ""))


if __name__ == "__main__":
    main()
