"""Time the numpy and numba variants of each hot kernel.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--threads N]

Numba compile time is excluded by a warm-up call. Prints one line per kernel
with the best-of-N wall time for each variant and the speedup.
"""
import argparse
import timeit

import numpy as np

from snowlab._backend import HAVE_NUMBA, configure_threads
from snowlab._kernels import KERNELS
from snowlab.assouad import PsiFamily, certify_window
from snowlab.generators import random_metric


def cases(rng):
    d = random_metric(rng, 120).dist
    fam = PsiFamily(1.0, 2.0)
    win = certify_window(fam, 10.0, 2.0**-10, 1e-6)
    ks = win.scales
    x, y = rng.uniform(-10, 10, (2, 20_000))
    diag = rng.uniform(0, 3, (20_000, 4))
    edge = rng.uniform(0, 3, (20_000, 12))
    ps = np.broadcast_to(np.geomspace(1, 64, 64), (20_000, 64)).copy()
    return {
        "first_violation": (d, 1e-9, False),
        "snowflake_sums": (x, y, fam.coefficient(ks), np.ldexp(1.0, ks), fam.q),
        "defect_grid": (diag, edge, ps),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()
    threads = configure_threads(args.threads)
    print(f"numba available: {HAVE_NUMBA}, threads: {threads}")
    print(f"{'kernel':<18}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, inputs in cases(np.random.default_rng(0)).items():
        np_fn, jit_fn = KERNELS[name]
        times = []
        for fn in (np_fn, jit_fn):
            fn(*inputs)  # warm-up, triggers compilation
            times.append(min(timeit.repeat(lambda: fn(*inputs), number=1, repeat=args.repeat)) * 1e3)
        print(f"{name:<18}{times[0]:>12.2f}{times[1]:>12.2f}{times[0] / times[1]:>9.1f}x")


if __name__ == "__main__":
    main()
