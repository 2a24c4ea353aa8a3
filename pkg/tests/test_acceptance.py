"""Acceptance criteria, one check per criterion.

Run under pytest (a summary line per criterion is printed at the end) or
directly with ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import contextlib
import io
import math
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from jetcheck.cli import main as cli_main  # noqa: E402
from jetcheck.corpus import CORPUS  # noqa: E402
from jetcheck.lojas import PolyQuantity, SamplerConfig, estimate_exponent  # noqa: E402
from jetcheck.polycore import Polynomial  # noqa: E402
from jetcheck.testfn import build_R, build_thom, build_Tstar, dist_D, dist_Dtilde, test_quantity  # noqa: E402
from jetcheck.verdict import E_R, INCONCLUSIVE, INSUFFICIENT, SUFFICIENT, JetProblem, analyze_jet  # noqa: E402
from oracles import central_gradient, dtilde_bruteforce, example1_sphere_min, loglog_slope  # noqa: E402
from shared import corpus_cross  # noqa: E402

CFG = SamplerConfig()


def _timed(fn, *a, **kw):
    t0 = time.perf_counter()
    out = fn(*a, **kw)
    return out, time.perf_counter() - t0


def _random_poly(rng, n, max_degree, nterms=6, min_degree=0):
    terms = {}
    for _ in range(nterms):
        d = int(rng.integers(min_degree, max_degree + 1))
        e = tuple(int(v) for v in rng.multinomial(d, [1 / n] * n))
        terms[e] = Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 5)))
    return Polynomial(terms, n)


def criterion_1():
    hopf = CORPUS["hopf"].polymap()
    q, dt = _timed(build_R, hopf, 2)
    N = 6
    tau2 = Polynomial.sum_of_squares(N, 0, 2)
    xi2 = Polynomial.sum_of_squares(N, 2, 2)
    x2 = tau2 + xi2
    y2 = Polynomial.sum_of_squares(N, 4, 2)
    expected = (tau2 * xi2 + x2 * x2) * y2
    ok = q.symbolic == expected and dict(q.symbolic.terms) == dict(expected.terms) and dt < 1.0
    return ok, f"exact term equality={q.symbolic == expected}, {len(expected)} terms, {dt:.3f}s"


def criterion_2():
    pr = JetProblem(CORPUS["hopf"].polymap(), 2, E_R, 2, "R")
    v, dt = _timed(analyze_jet, pr, CFG)
    e = v.estimate
    ok = (v.status == SUFFICIENT and 3.9 <= v.kappa_hat <= 4.1 and e.residual_max <= 1e-3 and dt < 60)
    return ok, f"{v.status} kappa_hat={v.kappa_hat:.6f} residual_max={e.residual_max:.2e} {dt:.1f}s"


def criterion_3():
    w = CORPUS["example1"].polymap()
    # brute-force confirmation first: >= 1e6 points per sphere at the 4 smallest radii
    radii = CFG.radii()[-4:]
    oracle = {p: loglog_slope(radii, [example1_sphere_min(r, p) for r in radii]) for p in (1, 2)}
    v2, dt2 = _timed(analyze_jet, JetProblem(w, 4, E_R, 2, "Rstar"), CFG)
    v1, dt1 = _timed(analyze_jet, JetProblem(w, 4, E_R, 1, "Rstar"), CFG)
    ok = (v2.status == INSUFFICIENT and 13.4 <= v2.kappa_hat <= 14.6
          and v1.status == INSUFFICIENT and 6.7 <= v1.kappa_hat <= 7.3
          and dt2 < 120 and dt1 < 120)
    return ok, (f"p=2: {v2.status} kappa_hat={v2.kappa_hat:.4f} (band [13.4,14.6], scan {oracle[2]:.4f}); "
                f"p=1: {v1.status} kappa_hat={v1.kappa_hat:.4f} (band [6.7,7.3], scan {oracle[1]:.4f}); "
                f"{dt2:.0f}s/{dt1:.0f}s")


def criterion_4():
    rng = np.random.default_rng(2024)
    # germs: the test quantities are defined for maps vanishing at the origin
    polys = [_random_poly(rng, int(rng.integers(1, 5)), 5, min_degree=1) for _ in range(50)]
    for e in CORPUS.values():
        polys.extend(e.polymap().components)
    bad = sum(build_thom(f).symbolic != build_Tstar(f, 2).symbolic for f in polys)
    return bad == 0, f"{len(polys)} polynomials, {bad} mismatches"


def criterion_5():
    rng = np.random.default_rng(5)
    worst_lo = worst_hi = worst_t = -math.inf
    ok = True
    for e in CORPUS.values():
        f = e.polymap()
        X = rng.standard_normal((10_000, f.n)) * rng.uniform(1e-3, 1, (10_000, 1))
        Y = rng.standard_normal((10_000, f.m))
        r1 = test_quantity("R", f, 1).values(X, Y)
        for p in (2, 3, 4):
            rp = test_quantity("R", f, p).values(X, Y)
            tp = test_quantity("T", f, p).values(X, Y)
            lo = 2.0 ** (1 - p) * r1 ** p - rp
            hi = rp - 2 * r1 ** p
            scale = np.maximum(rp, 1e-300)
            worst_lo = max(worst_lo, float((lo / scale).max()))
            worst_hi = max(worst_hi, float((hi / scale).max()))
            worst_t = max(worst_t, float(((tp - rp) / scale).max()))
            ok &= bool(np.all(lo <= 1e-12 * rp) and np.all(hi <= 1e-12 * rp) and np.all(tp <= rp + 1e-12 * rp))
    return ok, (f"max relative excess: lower {worst_lo:.1e}, upper {worst_hi:.1e}, T-R {worst_t:.1e} "
                f"(slack 1e-12)")


def criterion_6():
    rng = np.random.default_rng(6)
    worst_sand = 0.0
    worst_bf = 0.0
    above = 0
    misses = []
    for i in range(1000):
        n = int(rng.integers(1, 7))
        m = int(rng.integers(1, min(3, n) + 1))
        V = rng.standard_normal((m, n))
        dt, d = dist_Dtilde(V), dist_D(V)
        worst_sand = max(worst_sand, dt - d, d - math.sqrt(m) * dt)
        bf = dtilde_bruteforce(V, 100_000, seed=i)
        # the sampled minimum can only overestimate the true one
        above += dt > bf + 1e-12
        gap = abs(dt - bf)
        worst_bf = max(worst_bf, gap)
        if gap > 1e-3:
            misses.append((V, i))
    # a denser scan separates sampling error of the oracle from error in D-tilde
    dense = max((abs(dist_Dtilde(V) - dtilde_bruteforce(V, 3_000_000, seed=i)) for V, i in misses),
                default=0.0)
    ok = worst_sand <= 1e-9 and worst_bf <= 1e-3 and above == 0
    return ok, (f"1000 tuples: sandwich violation {worst_sand:.1e}; brute-force gap max {worst_bf:.1e}, "
                f"{len(misses)} above 1e-3 (3e6-sample rescan gap {dense:.1e}); "
                f"D-tilde above sampled min: {above}")


def criterion_7():
    parts = []
    ok = True
    for k in (1, 2, 3, 4):
        q = PolyQuantity(Polynomial.sum_of_squares(3), Fraction(k, 2))
        est, dt = _timed(estimate_exponent, q, CFG)
        good = abs(est.kappa_hat - k) <= 0.01 and dt < 10
        ok &= good
        parts.append(f"k={k}: {est.kappa_hat:.6f} ({dt:.1f}s)")
    return ok, "; ".join(parts)


def criterion_8():
    parts = []
    ok = True
    for name in CORPUS:
        cv = corpus_cross(name)
        st = cv.statuses
        good = cv.agree and INCONCLUSIVE not in st.values()
        ok &= good
        parts.append(f"{name}={'/'.join(sorted(set(st.values())))}{'' if good else '!'}")
    return ok, ", ".join(parts)


def criterion_9():
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 6))
        p = _random_poly(rng, n, 6, nterms=int(rng.integers(1, 8)), min_degree=1)
        x = rng.uniform(-1, 1, n)
        g = np.array([p.diff(i).evaluate(x) for i in range(n)])
        fd = central_gradient(p.evaluate, x, 1e-5)
        rel = np.linalg.norm(g - fd) / max(np.linalg.norm(g), 1e-300)
        worst = max(worst, float(rel))
    return worst <= 1e-5, f"100 pairs, max relative error {worst:.1e}"


def criterion_10():
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        outs = []
        for i in range(2):
            path = Path(tmp) / f"r{i}.json"
            with contextlib.redirect_stdout(io.StringIO()):
                code = cli_main(["analyze", "--corpus", "hopf", "--cross-validate", "--json", str(path)])
            outs.append((code, path.read_bytes()))
    same = outs[0][1] == outs[1][1]
    return same and outs[0][0] == outs[1][0] == 0, f"identical={same}, {len(outs[0][1])} bytes, exit {outs[0][0]}"


CHECKS = {k: globals()[f"criterion_{k}"] for k in range(1, 11)}


def _record(k):
    ok, detail = CHECKS[k]()
    try:
        import conftest

        conftest.CRITERIA[k] = (ok, detail)
    except ImportError:
        pass
    print(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    return ok, detail


@pytest.mark.parametrize("k", list(CHECKS))
def test_criterion(k):
    ok, detail = _record(k)
    assert ok, detail


if __name__ == "__main__":
    results = [CHECKS[k]() for k in CHECKS]
    for k, (ok, detail) in zip(CHECKS, results):
        print(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    sys.exit(0 if all(ok for ok, _ in results) else 1)
