"""Time the numba kernels against their numpy counterparts.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel is called once before timing so compilation is excluded.
"""
import argparse
import time

import numpy as np

from locdilate import _kernels
from locdilate.star_semigroup import powerset_intersection
from locdilate.testing import complex_normal, random_psd


def cases(rng):
    big = powerset_intersection(7)  # 128 elements
    phi = complex_normal(rng, (big.n, 4, 4))
    t = complex_normal(rng, (16, 16)) / 8
    powers = np.array([np.linalg.matrix_power(t, n) for n in range(33)])
    coeffs = complex_normal(rng, 17)
    grid = np.exp(2j * np.pi * np.arange(1024) / 1024)
    psd = random_psd(rng, 300, 200)
    vals = complex_normal(rng, (40, 40, 6, 6))
    return {
        "first_assoc_violation": (big.mul,),
        "kernel_gram": (vals,),
        "function_gram": (phi, big.mul, big.star, 3),
        "block_toeplitz": (powers, 1.5),
        "circle_max": (coeffs, grid),
        "pivoted_cholesky": (psd, 1e-10),
    }


def best_of(fn, args, repeat):
    fn(*args)
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    impls = _kernels.IMPLEMENTATIONS
    names = sorted(impls)
    print(f"{'kernel':24s}" + "".join(f"{n:>12s}" for n in names) + ("     speedup" if len(names) == 2 else ""))
    for kernel, kargs in cases(np.random.default_rng(0)).items():
        t = {n: best_of(impls[n][kernel], kargs, args.repeat) for n in names}
        row = f"{kernel:24s}" + "".join(f"{t[n] * 1e3:10.3f}ms" for n in names)
        if len(names) == 2:
            row += f"{t['numpy'] / t['numba']:11.2f}x"
        print(row)
    if "numba" not in impls:
        print("numba not available: only the numpy kernels were timed")


if __name__ == "__main__":
    main()
