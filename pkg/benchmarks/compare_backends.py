#!/usr/bin/env python3
"""Compare the compiled kernels against the pure-Python fallback.

Runs the same micro-benchmarks through dpbf._kernels (Cython) and
dpbf._kernels_py and prints per-operation timings with the speedup.
The two backends are bit-identical (tests/test_kernels.py); this script
only measures the cost of staying in pure Python.

Usage: python benchmarks/compare_backends.py [--quick]
"""

import argparse
import importlib
import sys
import time
from array import array

import numpy as np


def timed(fn, *args, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter_ns()
        fn(*args)
        best = min(best, time.perf_counter_ns() - start)
    return best


def benchmark_backend(kernels, n_elements, n_filters):
    m, k, seed = 9824, 7, 7
    stride = (m + 7) // 8
    s1, s2 = kernels.derive_salts(seed)
    rng = np.random.default_rng(1)
    members = array("Q", rng.integers(0, 1 << 24, n_elements, dtype=np.uint64).tobytes())
    probes = array("Q", rng.integers(1 << 40, 1 << 41, n_elements, dtype=np.uint64).tobytes())

    results = {}
    bits = bytearray(stride)
    results["insert"] = timed(
        kernels.set_bits_many, bits, m, k, s1, s2, members) / n_elements

    results["query one filter"] = timed(
        kernels.count_hits, bits, m, k, s1, s2, probes) / n_elements

    list_bits = bytearray(stride * n_filters)
    for i in range(n_filters):
        view = memoryview(list_bits)[i * stride:(i + 1) * stride]
        kernels.set_bits_many(view, m, k, s1, s2, members)
    results[f"query {n_filters}-filter list"] = timed(
        kernels.list_count_hits, list_bits, n_filters, stride, m, k, s1, s2,
        probes) / n_elements

    starts = array("Q", range(0, n_filters * 1024, 1024))
    ends = array("Q", range(1024, (n_filters + 1) * 1024, 1024))
    results["query interval plan"] = timed(
        kernels.plan_count_hits, starts, ends, list_bits, stride, m, k, s1, s2,
        members) / n_elements

    table = array("i", list(range(n_filters)) * ((1 << 14) // n_filters))
    results["query dispatch table"] = timed(
        kernels.table_count_hits, table, 10, 1024, list_bits, stride, m, k,
        s1, s2, members) / n_elements
    return results


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true",
                        help="smaller element counts")
    args = parser.parse_args()

    n_elements = 20_000 if args.quick else 200_000
    n_filters = 64

    backends = {}
    for name, module in (("cython", "dpbf._kernels"),
                         ("python", "dpbf._kernels_py")):
        try:
            backends[name] = importlib.import_module(module)
        except ImportError:
            print(f"note: {module} unavailable, skipping", file=sys.stderr)

    results = {name: benchmark_backend(mod, n_elements, n_filters)
               for name, mod in backends.items()}

    ops = list(next(iter(results.values())))
    width = max(len(op) for op in ops)
    header = f"{'operation':<{width}}"
    for name in results:
        header += f"  {name + ' ns/op':>14}"
    if len(results) == 2:
        header += f"  {'speedup':>8}"
    print(f"({n_elements} elements, {n_filters} filters, m=9824, k=7)")
    print(header)
    for op in ops:
        line = f"{op:<{width}}"
        for name in results:
            line += f"  {results[name][op]:>14.1f}"
        if len(results) == 2:
            ratio = results["python"][op] / results["cython"][op]
            line += f"  {ratio:>7.1f}x"
        print(line)


if __name__ == "__main__":
    main()
