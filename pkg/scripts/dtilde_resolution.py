#!/usr/bin/env python3
"""How fine must a sampled sphere search be to reproduce the smallest singular value?

For random tuples of m <= 3 vectors in R^n (n <= 6), compares the smallest
singular value with the minimum of |sum y_i v_i| over N uniform unit y, for
several N, and reports the worst gap and the number of tuples above 1e-3.
"""

from __future__ import annotations

import argparse

import numpy as np

from jetcheck.testfn import dist_Dtilde


def sampled_min(V, N, seed):
    rng = np.random.default_rng(seed)
    Y = rng.standard_normal((N, V.shape[0]))
    Y /= np.linalg.norm(Y, axis=1, keepdims=True)
    return float(np.linalg.norm(Y @ V, axis=1).min())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tuples", type=int, default=1000)
    ap.add_argument("--samples", type=int, nargs="*", default=[10_000, 100_000, 1_000_000])
    ap.add_argument("--seed", type=int, default=6)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    tuples = []
    for _ in range(args.tuples):
        n = int(rng.integers(1, 7))
        m = int(rng.integers(1, min(3, n) + 1))
        tuples.append(rng.standard_normal((m, n)))
    exact = [dist_Dtilde(V) for V in tuples]
    for N in args.samples:
        gaps = np.array([sampled_min(V, N, i) - e for i, (V, e) in enumerate(zip(tuples, exact))])
        print(f"N={N:>9}: worst gap {gaps.max():.2e}, tuples above 1e-3: {(gaps > 1e-3).sum()}, "
              f"negative gaps: {(gaps < -1e-12).sum()}")


if __name__ == "__main__":
    main()
