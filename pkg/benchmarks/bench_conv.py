"""Benchmark the compiled convolution core against the numpy fallback.

Runs both backends on the forward pass and the weight-gradient pass
over a sweep of channel counts and grid sizes, and prints the median
time per call. The compiled kernel wins at the small shapes the
unrolled network actually uses; the numpy path rides BLAS and takes
over once the im2col matrices get large. Either outcome is fine, the
point is that the two stay interchangeable.

Usage: python benchmarks/bench_conv.py [--repeat N]
"""

import argparse
import importlib
import time

import numpy as np

from pidd._kernels import convnp

try:
    _convc = importlib.import_module("pidd._kernels._convc")
except ImportError:
    _convc = None

SHAPES = [
    # in_ch, out_ch, n, k
    (4, 16, 32, 3),
    (8, 16, 32, 3),
    (16, 16, 32, 3),
    (16, 16, 64, 3),
    (48, 48, 64, 3),
    (4, 16, 32, 5),
]


def _median_time(fn, repeat):
    fn()  # warm up
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return float(np.median(times)) * 1e6


def bench(repeat):
    rng = np.random.default_rng(0)
    impls = [("numpy", convnp)]
    if _convc is not None:
        impls.insert(0, ("compiled", _convc))
    header = "%-18s %-10s" + " %14s" * (2 * len(impls))
    cols = []
    for name, _ in impls:
        cols += ["fwd %s" % name, "grad %s" % name]
    print(header % (("shape", "k") + tuple(cols)))
    for in_ch, out_ch, n, k in SHAPES:
        x = rng.standard_normal((in_ch, n, n))
        w = rng.standard_normal((out_ch, in_ch, k, k))
        b = rng.standard_normal(out_ch)
        gout = rng.standard_normal((out_ch, n, n))
        row = []
        for _, impl in impls:
            row.append(_median_time(lambda: impl.conv2d_same(x, w, b), repeat))
            row.append(_median_time(
                lambda: impl.conv2d_grad_weights(x, gout, k), repeat))
        label = "%dx%d %d->%d" % (n, n, in_ch, out_ch)
        print(("%-18s %-10d" + " %12.1fus" * len(row))
              % ((label, k) + tuple(row)))
    if _convc is not None:
        agree = np.abs(
            _convc.conv2d_same(x, w, b) - convnp.conv2d_same(x, w, b)).max()
        print("backend agreement on last shape: max abs diff %.3g" % agree)
    else:
        print("compiled backend not importable; numpy only")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--repeat", type=int, default=30)
    bench(parser.parse_args().repeat)
