#!/usr/bin/env python3
"""Brute-force sphere scans for the quartic w = (x1 - x2^2)^2 + x1^4.

Scans >= 1e6 points per circle |x| = eps and fits the growth exponent of
min R*_p(w) for p = 1, 2.  The minimum sits in a valley of angular width
about eps^6 around x1 = x2^2 - 2 x1^3, far below the spacing of a uniform
angle grid, so the scan also runs along the offset t = x1 - x2^2 on a
logarithmic grid (which resolves the valley without cancellation).

    python3 scripts/example1_scan.py [--points 1000000] [--radii 12]
"""

from __future__ import annotations

import argparse
import math

import numpy as np


def rstar(x1, x2, t, eps, p):
    w = t * t + x1 ** 4
    g1 = 2 * t + 4 * x1 ** 3
    g2 = -4 * x2 * t
    return np.abs(w) ** p + np.hypot(g1, g2) ** p * eps ** p


def on_offsets(t, eps, sgn2, p):
    # x1 = s + t with s = x2^2 solves (s + t)^2 + s = eps^2
    b = 2 * t + 1
    c = t * t - eps * eps
    s = (-2 * c) / (b + np.sqrt(b * b - 4 * c))
    ok = s >= 0
    s, t = s[ok], t[ok]
    return rstar(s + t, sgn2 * np.sqrt(s), t, eps, p), t


def scan(eps, p, npts):
    th = np.linspace(0, 2 * np.pi, npts, endpoint=False)
    x1, x2 = eps * np.sin(th), eps * np.cos(th)
    uniform = float(rstar(x1, x2, x1 - x2 * x2, eps, p).min())
    best, where = uniform, None
    for sgn2 in (1.0, -1.0):
        for sgnt in (1.0, -1.0):
            t = sgnt * np.logspace(14 * math.log10(eps), math.log10(0.999 * eps ** 2), npts // 4)
            v, tt = on_offsets(t, eps, sgn2, p)
            k = int(np.argmin(v))
            if v[k] < best:
                best, where = float(v[k]), (sgn2, tt[k])
    if where is not None:
        sgn2, t0 = where
        v, _ = on_offsets(t0 * (1 + np.linspace(-1e-3, 1e-3, npts)), eps, sgn2, p)
        best = min(best, float(v.min()))
    return uniform, best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=1_000_000)
    ap.add_argument("--radii", type=int, default=12)
    ap.add_argument("--tail", type=int, default=6)
    args = ap.parse_args()
    radii = 0.1 * 0.5 ** np.arange(args.radii)
    for p in (1, 2):
        rows = [scan(e, p, args.points) for e in radii]
        uni = np.array([r[0] for r in rows])
        best = np.array([r[1] for r in rows])
        tail = slice(-args.tail, None)
        s_uni = np.polyfit(np.log(radii[tail]), np.log(uni[tail]), 1)[0]
        s_best = np.polyfit(np.log(radii[tail]), np.log(best[tail]), 1)[0]
        print(f"p={p}: slope {s_best:.4f} (uniform angle grid alone: {s_uni:.4f})")
        for e, u, b in zip(radii, uni, best):
            print(f"   eps={e:.3e}  min={b:.6e}  min/eps^{8 * p}={b / e ** (8 * p):.6f}  uniform-grid min={u:.3e}")


if __name__ == "__main__":
    main()
