"""Compare the compiled and numpy RK4 kernels on identical inputs.

    python benchmarks/bench_kernels.py [--repeat 5]

Reports the best wall time per kernel and backend, the speed-up, and the
largest difference between the two results.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from lorentzdd import _kernels_py
from lorentzdd.model import PhysicalParams, first_order_generator
from lorentzdd.oracle import bath_modes, bath_occupations

try:
    from lorentzdd import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def linear_case(backend, steps=20_000):
    p = PhysicalParams()
    L = np.ascontiguousarray(first_order_generator(p, 25.0))
    y0 = np.array([1.0, 0.0, 0.0], dtype=complex)
    return lambda: backend.rk4_linear(L, y0, 1e-3, steps)


def bath_case(backend, N=4001, steps=2_000):
    p = PhysicalParams()
    freqs, kappa, _ = bath_modes(p, N, 40.0)
    occ = bath_occupations(p, freqs)

    def call():
        B = np.zeros(N, dtype=complex)
        return backend.rk4_bath(p.omega1, p.omega2, p.g, freqs, kappa, occ,
                                1.0 + 0j, 0j, B, 1e-3, steps)
    return call


def best_time(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def max_diff(a, b):
    if isinstance(a, tuple):
        return max(float(np.max(np.abs(x - y))) for x, y in zip(a, b))
    return float(np.max(np.abs(a - b)))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _kernels_c is None:
        print("compiled kernels not built; only the numpy backend is available")
    cases = [("rk4_linear 3x3, 20000 steps", linear_case),
             ("rk4_bath N=4001, 2000 steps", bath_case)]
    print(f"{'kernel':34s} {'numpy [s]':>10s} {'cython [s]':>11s} {'speed-up':>9s} {'max diff':>10s}")
    for label, make in cases:
        t_py = best_time(make(_kernels_py), args.repeat)
        if _kernels_c is None:
            print(f"{label:34s} {t_py:10.4f} {'-':>11s} {'-':>9s} {'-':>10s}")
            continue
        t_c = best_time(make(_kernels_c), args.repeat)
        diff = max_diff(make(_kernels_py)(), make(_kernels_c)())
        print(f"{label:34s} {t_py:10.4f} {t_c:11.4f} {t_py / t_c:9.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
