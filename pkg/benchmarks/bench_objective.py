#!/usr/bin/env python3
"""Benchmark the likelihood kernel: numba JIT vs pure numpy.

The simplex search spends nearly all its time in the per-record probability
accumulation, so this measures exactly the quantity that sets fit wall time.

Usage: python benchmarks/bench_objective.py [K ...]
"""

import sys
import time

import numpy as np

from choimle import _kernels
from choimle.estimator import q_matrix
from choimle.experiment import generate_dataset


def time_fn(fn, args, repeats):
    fn(*args)  # warm-up (and JIT compile for the numba path)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def main():
    ks = [int(a) for a in sys.argv[1:]] or [100, 1000, 10_000]
    rng = np.random.default_rng(0)
    g = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    cr, ci = _kernels.planar_c(np.triu(g))

    impls = [("numpy", _kernels._probs_numpy)]
    if _kernels.NUMBA_ENABLED:
        impls.append(("numba", _kernels._probs_tri_numba))
    else:
        print("numba unavailable or disabled (CHOIMLE_NO_NUMBA); numpy only")

    print(f"{'K':>8} " + " ".join(f"{name + ' us/eval':>16}" for name, _ in impls) + f" {'speedup':>9}")
    for k in ks:
        qr, qi = _kernels.planar_q(q_matrix(generate_dataset(k, 42)))
        repeats = max(20, min(2000, 2_000_000 // k))
        times = [time_fn(fn, (cr, ci, qr, qi), repeats) for _, fn in impls]
        cols = " ".join(f"{t * 1e6:16.1f}" for t in times)
        speedup = f"{times[0] / times[-1]:8.1f}x" if len(times) == 2 else f"{'-':>9}"
        print(f"{k:>8} {cols} {speedup}")

        values = [float(fn(cr, ci, qr, qi).sum()) for _, fn in impls]
        if len(values) == 2:
            rel = abs(values[0] - values[1]) / abs(values[0])
            assert rel < 1e-10, f"backends disagree at K={k}: rel dev {rel:.2e}"


if __name__ == "__main__":
    main()
