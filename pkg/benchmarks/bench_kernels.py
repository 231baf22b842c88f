"""Time the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from farxts import _kernels_py

try:
    from farxts import _kernels_cy
except ImportError:  # extension not built
    _kernels_cy = None


def cases():
    rng = np.random.default_rng(0)
    out = []
    for K, n in [(6, 12), (10, 256), (20, 10_000)]:
        knots = np.concatenate([np.zeros(3), np.linspace(0, 1, K - 2), np.ones(3)])
        pts = rng.uniform(0, 1, n)
        out.append((f"bspline_basis K={K} n={n}", "bspline_basis", (knots, 4, pts)))
    for n, p, q in [(36, 40, 10), (100, 60, 12)]:
        Z = rng.normal(size=(n, p))
        Z -= Z.mean(axis=0)
        Y = Z @ rng.normal(size=(p, q)) + rng.normal(size=(n, q))
        Y -= Y.mean(axis=0)
        out.append((f"nipals_weights n={n} p={p} q={q}", "nipals_weights", (Z, Y, 1e-12, 500)))
    return out


def best_time(fun, args, repeat):
    number = max(1, int(0.05 / max(timeit.timeit(lambda: fun(*args), number=1), 1e-7)))
    return min(timeit.repeat(lambda: fun(*args), number=number, repeat=repeat)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    print(f"{'case':<36} {'numpy (us)':>12} {'cython (us)':>12} {'speedup':>8}")
    for label, name, inputs in cases():
        t_py = best_time(getattr(_kernels_py, name), inputs, args.repeat)
        if _kernels_cy is None:
            print(f"{label:<36} {t_py * 1e6:>12.1f} {'n/a':>12} {'':>8}")
            continue
        t_cy = best_time(getattr(_kernels_cy, name), inputs, args.repeat)
        print(f"{label:<36} {t_py * 1e6:>12.1f} {t_cy * 1e6:>12.1f} {t_py / t_cy:>7.1f}x")


if __name__ == "__main__":
    main()
