"""Compare the compiled and pure-Python enumeration kernels.

    python benchmarks/bench_enum.py [--repeat 3]

Prints wall time per case for each backend and checks that both return the
same vectors.
"""

import argparse
import time

import numpy as np

from kmtheta import _fpkernel_py
from kmtheta.lattice import e8_lattice, total_majorant

try:
    from kmtheta import _fpkernel
except ImportError:
    _fpkernel = None


def cases():
    yield "E8, q <= 3", total_majorant(e8_lattice()), 3.0, 0
    yield "E8, histogram q <= 4", total_majorant(e8_lattice()), 4.0, 1
    rng = np.random.default_rng(7)
    A = rng.normal(size=(6, 6))
    yield "random rank 6, Q <= 40", A @ A.T + np.eye(6), 40.0, 0
    yield "diag(1,1,1) majorant, Q <= 400", np.eye(3), 400.0, 0


def run(kernel, M, bound, hist):
    R = np.ascontiguousarray(np.linalg.cholesky(M).T)
    if hist:
        G = np.rint(2 * M).astype(np.int64)
        return kernel.histogram_ball(R, bound * (1 + 1e-9), G)
    return kernel.enumerate_ball(R, bound * (1 + 1e-9), np.zeros(len(M)), -1)


def timed(kernel, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        out = run(kernel, *args)
        best = min(best, time.perf_counter() - t)
    return best, out


def same(a, b):
    if isinstance(a, dict):
        return a == b
    key = lambda X: sorted(map(tuple, np.asarray(X).tolist()))
    return key(a) == key(b)


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    print(f"{'case':34s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s}  agree")
    for name, M, bound, hist in cases():
        tp, op = timed(_fpkernel_py, (M, bound, hist), args.repeat)
        if _fpkernel is None:
            print(f"{name:34s} {tp:11.4f} {'-':>11s} {'-':>8s}  -")
            continue
        tc, oc = timed(_fpkernel, (M, bound, hist), args.repeat)
        print(f"{name:34s} {tp:11.4f} {tc:11.4f} {tp / tc:8.1f}  {same(op, oc)}")


if __name__ == "__main__":
    main()
