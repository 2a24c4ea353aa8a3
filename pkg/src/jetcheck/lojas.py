"""Growth-exponent estimation by minimisation over shrinking spheres.

A quantity is minimised over ``{|x| = eps}`` (times ``{|y| = 1}`` when it
depends on y) at radii ``eps0 * rho**k``; the slope of ``log min`` against
``log eps`` over the smallest radii estimates the local Lojasiewicz exponent.

Sphere search runs in two stages.  A vectorised float64 compass search moves
every start downhill.  Each endpoint is then re-evaluated at high precision;
when float64 was unreliable there (large rounding error, or a collapse by
many orders of magnitude) the start is refined by the same compass search in
mpfr arithmetic.  Every start is processed independently of the starts after
it, so results do not depend on batching and adding starts never raises the
reported minimum.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Protocol, Sequence

import gmpy2
import numpy as np

from .polycore import Polynomial, hp_context, to_mpfr

# float-stage step floor, relative to the sphere radius
_FLOAT_STEP_FLOOR = 2.0 ** -50
# float-stage moves must lower the value by more than this relative amount
_FLOAT_DECREASE = 1e-14
# high-precision refinement: initial step, convergence checkpoint, and floor
_HP_STEP_START = 2 ** -24
_HP_STEP_MID = 2 ** -70
_HP_STEP_FLOOR = 2 ** -100
_MAX_STEP = 0.25
# coordinates below this fraction of their sphere radius are tried at exactly 0
_SNAP = 1e-9
# endpoints whose float value is off by more than this are refined
_MISMATCH = 1e-8
# ... as are endpoints whose float value fell by this factor from the start
_COLLAPSE = 1e-20
# refine only starts within this factor of the best result so far
_COMPETITIVE = 10.0
# values below this are treated as exact zeros
_UNDERFLOW = 1e-300


class SphereObjective(Protocol):
    nx: int
    ny: int

    def values(self, X: np.ndarray, Y: np.ndarray | None) -> np.ndarray: ...

    def value_hp(self, x: Sequence, y: Sequence | None): ...


@dataclass(frozen=True)
class SamplerConfig:
    eps0: float = 1e-1
    rho: float = 0.5
    nradii: int = 12
    nstarts: int = 64
    local_steps: int = 200
    seed: int = 0
    tail: int = 6

    def __post_init__(self):
        if not self.eps0 > 0:
            raise ValueError("eps0 must be positive")
        if not 0 < self.rho < 1:
            raise ValueError("rho must lie in (0, 1)")
        if self.nradii < 4:
            raise ValueError("nradii must be at least 4")
        if not 2 <= self.tail <= self.nradii:
            raise ValueError("tail must satisfy 2 <= tail <= nradii")
        if self.nstarts < 1:
            raise ValueError("nstarts must be positive")
        if self.local_steps < 1:
            raise ValueError("local_steps must be positive")

    def radii(self) -> list[float]:
        return [self.eps0 * self.rho ** k for k in range(self.nradii)]


@dataclass(frozen=True)
class SphereMinimum:
    radius: float
    min_value: float
    argmin_x: tuple
    argmin_y: tuple | None = None
    # the minimum is numerically zero: exactly 0, or still shrinking with the search resolution
    vanishing: bool = False
    # coordinates come from the high-precision refinement (stored as exact Fractions)
    refined: bool = False


@dataclass(frozen=True)
class ExponentEstimate:
    kappa_hat: float
    intercept: float
    stderr: float
    residual_max: float
    samples: tuple[SphereMinimum, ...]
    degenerate: bool = False
    tail: int = 0

    @property
    def tail_samples(self) -> tuple[SphereMinimum, ...]:
        return self.samples[-self.tail:] if self.tail else ()

    def witness(self) -> SphereMinimum | None:
        """Smallest-radius sample, preferring one where the quantity vanishes."""
        tail = self.tail_samples
        for s in tail:
            if s.vanishing or s.min_value <= _UNDERFLOW:
                return s
        return tail[-1] if tail else None


class PolyQuantity:
    """``|P(x)|**power`` for a polynomial P in x; e.g. ``|x|^k`` or ``|grad f|``."""

    ny = 0

    def __init__(self, poly: Polynomial, power: float = 1):
        self.poly = poly
        self.power = power
        self.nx = poly.nvars
        self._c = poly.compiled()

    def values(self, X, Y=None):
        v = np.abs(self._c.batch(np.asarray(X, dtype=float)))
        return v if self.power == 1 else v ** self.power

    def value_hp(self, x, y=None):
        v = abs(self._c.hp([to_mpfr(a) for a in x]))
        if self.power == 1:
            return v
        fp = Fraction(self.power).limit_denominator(10 ** 6)
        if fp.denominator == 1:
            return v ** int(fp)
        if v == 0:
            return gmpy2.mpfr(0)
        if fp.denominator == 2:
            return gmpy2.sqrt(v) ** int(fp.numerator)
        return gmpy2.exp(gmpy2.log(v) * to_mpfr(self.power))

    def evaluate(self, x, y=None) -> float:
        with hp_context():
            return float(self.value_hp(x))


def gwozdziewicz_bound(d: int, n: int) -> Fraction:
    """Upper bound ``(d-1)^n + 1`` on the local Lojasiewicz exponent of an isolated zero."""
    if d < 1 or n < 1:
        raise ValueError("d and n must be positive")
    return Fraction((d - 1) ** n + 1)


# ---------------------------------------------------------------------------
# starts


def sphere_starts(nx: int, ny: int, radius: float, nstarts: int, seed: int):
    """Uniform points on ``{|x|=radius} x {|y|=1}``; start i depends only on (seed, i)."""
    X = np.empty((nstarts, nx))
    Y = np.empty((nstarts, ny)) if ny else None
    for i in range(nstarts):
        rng = np.random.default_rng([seed, i])
        u = rng.standard_normal(nx)
        X[i] = radius * u / np.linalg.norm(u)
        if ny:
            v = rng.standard_normal(ny)
            Y[i] = v / np.linalg.norm(v)
    return X, Y


# ---------------------------------------------------------------------------
# float stage


def _project(Z, nx, radius):
    x = Z[:, :nx]
    Z[:, :nx] = x * (radius / np.sqrt((x * x).sum(axis=1)))[:, None]
    if Z.shape[1] > nx:
        y = Z[:, nx:]
        Z[:, nx:] = y / np.sqrt((y * y).sum(axis=1))[:, None]


def _eval_split(obj, Z, nx):
    Y = Z[:, nx:] if obj.ny else None
    return obj.values(Z[:, :nx], Y)


def _feasible(obj, Z, nx):
    fn = getattr(obj, "feasible", None)
    if fn is None:
        return np.ones(Z.shape[0], dtype=bool)
    return fn(Z[:, :nx])


def compass_float(obj, X, Y, radius: float, steps: int):
    """Projected compass search in float64, one independent run per row."""
    nx = obj.nx
    Z = X.copy() if Y is None else np.hstack([X, Y])
    d = Z.shape[1]
    scale = np.array([radius] * nx + [1.0] * (d - nx))
    S = Z.shape[0]
    cur = _eval_split(obj, Z, nx)
    start_vals = cur.copy()
    h = np.full(S, _MAX_STEP)
    active = np.ones(S, dtype=bool)
    for _ in range(steps):
        idx = np.flatnonzero(active)
        if not idx.size:
            break
        k = idx.size
        # all 2d compass moves of every active row, evaluated in one batch
        T = np.repeat(Z[idx], 2 * d, axis=0)
        step = np.repeat(h[idx], 2 * d)
        cols = np.tile(np.repeat(np.arange(d), 2), k)
        sgn = np.tile([1.0, -1.0], k * d)
        T[np.arange(T.shape[0]), cols] += sgn * step * scale[cols]
        _project(T, nx, radius)
        v = _eval_split(obj, T, nx)
        v = np.where(_feasible(obj, T, nx), v, np.inf).reshape(k, 2 * d)
        jbest = np.argmin(v, axis=1)
        vbest = v[np.arange(k), jbest]
        improved = vbest < cur[idx] - _FLOAT_DECREASE * np.abs(cur[idx])
        rows = idx[improved]
        Z[rows] = T.reshape(k, 2 * d, -1)[np.flatnonzero(improved), jbest[improved]]
        cur[rows] = vbest[improved]
        h[idx] = np.where(improved, np.minimum(h[idx] * 2.0, _MAX_STEP), h[idx] * 0.5)
        active[idx] = h[idx] >= _FLOAT_STEP_FLOOR
    return Z, cur, start_vals


# ---------------------------------------------------------------------------
# high-precision stage


class _HP:
    """Scalar high-precision view of an objective on a fixed product of spheres."""

    def __init__(self, obj, radius):
        self.obj = obj
        self.nx = obj.nx
        self.ny = obj.ny
        self.radius = to_mpfr(radius)
        self.feasible = getattr(obj, "feasible_hp", None)

    def project(self, z):
        nx = self.nx
        x = z[:nx]
        nrm = gmpy2.sqrt(sum((a * a for a in x), gmpy2.mpfr(0)))
        if nrm == 0:
            return None
        out = [a * self.radius / nrm for a in x]
        if self.ny:
            y = z[nx:]
            ny = gmpy2.sqrt(sum((a * a for a in y), gmpy2.mpfr(0)))
            if ny == 0:
                return None
            out += [a / ny for a in y]
        return out

    def value(self, z):
        if self.feasible is not None and not self.feasible(z[:self.nx]):
            return None
        return self.obj.value_hp(z[:self.nx], z[self.nx:] if self.ny else None)

    def snap(self, z, best):
        """Try zeroing coordinates that are tiny relative to their sphere."""
        nx = self.nx
        t = list(z)
        changed = False
        for j, a in enumerate(t):
            sc = self.radius if j < nx else 1
            if a != 0 and abs(a) < _SNAP * sc:
                t[j] = gmpy2.mpfr(0)
                changed = True
        if not changed:
            return z, best
        t = self.project(t)
        if t is None:
            return z, best
        v = self.value(t)
        if v is not None and v <= best:
            return t, v
        return z, best

    def refine(self, z, best, budget):
        nx = self.nx
        d = len(z)
        scales = [self.radius] * nx + [gmpy2.mpfr(1)] * (d - nx)
        h = gmpy2.mpfr(_HP_STEP_START)
        mid = None
        for _ in range(budget):
            improved = False
            for j in range(d):
                for sgn in (1, -1):
                    t = list(z)
                    t[j] = t[j] + sgn * h * scales[j]
                    t = self.project(t)
                    if t is None:
                        continue
                    v = self.value(t)
                    if v is not None and v < best:
                        z, best = t, v
                        improved = True
            if best == 0:
                break
            h = min(h * 2, gmpy2.mpfr(_MAX_STEP)) if improved else h / 2
            if mid is None and h < _HP_STEP_MID:
                mid = best
            if h < _HP_STEP_FLOOR:
                break
        converged = h < _HP_STEP_FLOOR
        vanishing = best == 0 or (converged and mid is not None and best < 1e-12 * mid)
        return z, best, vanishing


def _exact(z):
    return tuple(Fraction(*gmpy2.mpfr(a).as_integer_ratio()) for a in z)


def min_on_sphere(q: SphereObjective, radius: float, cfg: SamplerConfig,
                  starts: tuple[np.ndarray, np.ndarray | None] | None = None) -> SphereMinimum | None:
    """Smallest value of ``q`` found on ``{|x|=radius}`` (times ``{|y|=1}``).

    Returns None only when ``starts`` is given and empty.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    nx, ny = q.nx, q.ny
    if starts is None:
        X0, Y0 = sphere_starts(nx, ny, radius, cfg.nstarts, cfg.seed)
    else:
        X0, Y0 = starts
        if X0.shape[0] == 0:
            return None
    Z, fvals, fstart = compass_float(q, X0, Y0, radius, cfg.local_steps)
    hp = _HP(q, radius)
    results = []
    running = math.inf
    with hp_context():
        for i in range(Z.shape[0]):
            z = [gmpy2.mpfr(float(a)) for a in Z[i]]
            v = hp.value(z)
            if v is None:
                # the float stage accepted a point the exact test rejects; fall back to the start
                z = [gmpy2.mpfr(float(a)) for a in (X0[i] if Y0 is None else np.hstack([X0[i], Y0[i]]))]
                v = hp.value(z)
                if v is None:
                    continue
            z, v = hp.snap(z, v)
            refined = False
            vanishing = v == 0
            vf = float(v)
            unreliable = (abs(fvals[i] - vf) > _MISMATCH * abs(vf)
                          or (fstart[i] > 0 and fvals[i] < _COLLAPSE * fstart[i]))
            if not vanishing and unreliable and vf <= _COMPETITIVE * running:
                z, v, vanishing = hp.refine(z, v, 4 * cfg.local_steps)
                z, v = hp.snap(z, v)
                vanishing = vanishing or v == 0
                refined = True
            vf = float(v)
            running = min(running, vf)
            coords = _exact(z) if refined else tuple(float(a) for a in z)
            results.append((vf, tuple(float(a) for a in z), coords, vanishing, refined))
    if not results:
        return None
    vf, _, coords, vanishing, refined = min(results, key=lambda r: (r[0], r[1]))
    return SphereMinimum(
        radius=radius,
        min_value=vf,
        argmin_x=coords[:nx],
        argmin_y=coords[nx:] if ny else None,
        vanishing=bool(vanishing),
        refined=refined,
    )


# ---------------------------------------------------------------------------
# fitting


def _threads() -> int:
    raw = os.environ.get("JETCHECK_THREADS", "").strip()
    n = int(raw) if raw else 0
    return n if n > 0 else (os.cpu_count() or 1)


def map_radii(fn, radii: Sequence[float]) -> list:
    """``[fn(r) for r in radii]``, run concurrently up to ``JETCHECK_THREADS``."""
    workers = min(_threads(), len(radii))
    if workers <= 1:
        return [fn(r) for r in radii]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, radii))


def fit_exponent(samples: Sequence[SphereMinimum], tail: int) -> ExponentEstimate:
    """OLS slope of ``log min_value`` on ``log radius`` over the last ``tail`` samples."""
    samples = tuple(sorted(samples, key=lambda s: -s.radius))
    tail = min(tail, len(samples))
    fit = samples[-tail:]
    degenerate = any(s.vanishing or s.min_value <= _UNDERFLOW for s in fit)
    if degenerate or tail < 2:
        return ExponentEstimate(math.inf if degenerate else math.nan, math.nan, math.nan,
                                math.nan, samples, degenerate, tail)
    lx = np.array([math.log(s.radius) for s in fit])
    ly = np.array([math.log(s.min_value) for s in fit])
    xm, ym = lx.mean(), ly.mean()
    sxx = float(((lx - xm) ** 2).sum())
    slope = float(((lx - xm) * (ly - ym)).sum() / sxx)
    intercept = float(ym - slope * xm)
    resid = ly - (intercept + slope * lx)
    if tail > 2:
        stderr = math.sqrt(float((resid ** 2).sum()) / (tail - 2) / sxx)
    else:
        stderr = 0.0
    return ExponentEstimate(slope, intercept, stderr, float(np.abs(resid).max()),
                            samples, False, tail)


def estimate_exponent(q: SphereObjective, cfg: SamplerConfig = SamplerConfig()) -> ExponentEstimate:
    """Empirical local Lojasiewicz exponent of ``min_{sphere} q`` as the radius shrinks."""
    samples = map_radii(lambda r: min_on_sphere(q, r, cfg), cfg.radii())
    return fit_exponent(samples, cfg.tail)
