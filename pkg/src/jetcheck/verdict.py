"""Sufficiency verdicts from growth exponents, plus the classical conditions.

A verdict compares an estimated exponent with a threshold inside a tolerance
band ``tau = max(0.15, 3 * stderr)``.  For the jet class ``E_r`` reaching the
threshold is allowed; for ``E_r_plus_1`` a strict gap below it is required.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import gmpy2
import numpy as np

from .lojas import (
    ExponentEstimate,
    PolyQuantity,
    SamplerConfig,
    SphereMinimum,
    compass_float,
    estimate_exponent,
    fit_exponent,
    map_radii,
    min_on_sphere,
    sphere_starts,
)
from .polycore import Polynomial, PolyMap, hp_context, to_mpfr
from .testfn import _MapKernels, build_thom, dist_D_batch, dist_D_hp, test_quantity

SUFFICIENT = "SUFFICIENT"
INSUFFICIENT = "INSUFFICIENT"
INCONCLUSIVE = "INCONCLUSIVE"
STATUSES = (SUFFICIENT, INSUFFICIENT, INCONCLUSIVE)

E_R = "E_r"
E_R_PLUS_1 = "E_r_plus_1"
SMOOTHNESS = (E_R, E_R_PLUS_1)

PROBLEM_KINDS = ("R", "T", "Rstar", "Tstar")

MIN_TOLERANCE = 0.15
MIN_HORN_RADII = 4

# flags attached to Kuo verdicts
EMPTY_HORN = "EMPTY_HORN"
UNDETERMINED_EMPTY_HORN = "UNDETERMINED_EMPTY_HORN"
SPARSE_HORN = "SPARSE_HORN"


class ProblemError(ValueError):
    """An analysis request that violates the problem invariants."""


@dataclass(frozen=True)
class JetProblem:
    """Analysis request: is the r-jet ``f`` sufficient in the given class?

    ``n`` and ``m`` default to the dimensions of ``f`` and are checked
    against them when given.
    """

    f: PolyMap
    r: int
    smoothness: str = E_R
    p: int = 2
    kind: str = "R"
    n: int | None = None
    m: int | None = None

    def __post_init__(self):
        if not isinstance(self.f, PolyMap):
            raise ProblemError("f must be a PolyMap")
        for name, want in (("n", self.f.n), ("m", self.f.m)):
            got = getattr(self, name)
            if got is None:
                object.__setattr__(self, name, want)
            elif got != want:
                raise ProblemError(f"{name}={got} does not match the map ({name}={want})")
        n, m, r = self.n, self.m, self.r
        if n < m:
            raise ProblemError(f"need n >= m, got n={n} < m={m}")
        if self.smoothness not in SMOOTHNESS:
            raise ProblemError(f"smoothness must be one of {SMOOTHNESS}, got {self.smoothness!r}")
        if self.kind not in PROBLEM_KINDS:
            raise ProblemError(f"kind must be one of {PROBLEM_KINDS}, got {self.kind!r}")
        if self.kind in ("Rstar", "Tstar") and m != 1:
            raise ProblemError(f"kind {self.kind} needs m=1, got m={m}")
        if not isinstance(self.p, int) or isinstance(self.p, bool) or self.p < 1:
            raise ProblemError(f"p must be a positive integer, got {self.p!r}")
        if not isinstance(r, int) or isinstance(r, bool) or r < 1:
            raise ProblemError(f"r must be a positive integer, got {r!r}")
        if self.smoothness == E_R and m > 1 and r < 2:
            raise ProblemError("class E_r with m > 1 requires r >= 2")
        deg = self.f.degree
        if deg > r:
            raise ProblemError(f"map has degree {deg} > r={r}; pass its r-jet (see truncate)")

    @property
    def quantity_kind(self) -> str:
        """R and T become their scalar forms when m=1."""
        if self.m == 1:
            return {"R": "Rstar", "T": "Tstar"}.get(self.kind, self.kind)
        return self.kind

    @property
    def threshold(self) -> float:
        return float(self.p * (self.r if self.smoothness == E_R else self.r + 1))


@dataclass(frozen=True)
class HornSpec:
    """Horn neighbourhood ``{x : |f(x)| < sigma |x|^s}`` of the zero set."""

    s: float
    sigma: float = 0.5

    def __post_init__(self):
        if not self.s >= 1:
            raise ValueError(f"horn exponent s must be >= 1, got {self.s}")
        if not self.sigma > 0:
            raise ValueError(f"horn width sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class SufficiencyVerdict:
    status: str
    criterion: str
    kappa_hat: float
    threshold: float
    margin: float
    tolerance: float
    witness: SphereMinimum | None = None
    estimate: ExponentEstimate | None = field(default=None, repr=False)
    flags: tuple[str, ...] = ()

    @property
    def exit_code(self) -> int:
        return STATUSES.index(self.status)


def decide(est: ExponentEstimate, threshold: float, smoothness: str, criterion: str,
           flags: tuple[str, ...] = ()) -> SufficiencyVerdict:
    """Apply the tolerance-band policy to an exponent estimate."""
    k = est.kappa_hat
    se = est.stderr if math.isfinite(est.stderr) else 0.0
    tau = max(MIN_TOLERANCE, 3.0 * se)
    if est.degenerate:
        status = INSUFFICIENT
    elif not math.isfinite(k):
        status = INCONCLUSIVE
    elif smoothness == E_R:
        status = SUFFICIENT if k <= threshold + tau else INSUFFICIENT
    elif k <= threshold - tau:
        status = SUFFICIENT
    elif k > threshold + tau:
        status = INSUFFICIENT
    else:
        status = INCONCLUSIVE
    if est.degenerate:
        margin = -math.inf
    elif math.isfinite(k):
        margin = (threshold - k) / tau
    else:
        margin = math.nan
    witness = est.witness() if status == INSUFFICIENT else None
    return SufficiencyVerdict(status, criterion, k, threshold, margin, tau, witness, est, flags)


def _growth_phrase(smoothness: str, threshold: float) -> str:
    op = "<=" if smoothness == E_R else "< (strictly)"
    return f"exponent {op} {threshold:g}"


def analyze_jet(problem: JetProblem, cfg: SamplerConfig = SamplerConfig()) -> SufficiencyVerdict:
    """Sufficiency of the r-jet from the growth of R_p or T_p near the origin."""
    kind = problem.quantity_kind
    f = problem.f if problem.m > 1 else problem.f.components[0]
    q = test_quantity(kind, f, problem.p)
    est = estimate_exponent(q, cfg)
    crit = (f"{kind}_{problem.p} growth on |x|=eps" + ("" if q.ny == 0 else ", |y|=1")
            + f": {_growth_phrase(problem.smoothness, problem.threshold)}"
            + f" (class {problem.smoothness})")
    return decide(est, problem.threshold, problem.smoothness, crit)


def _scalar(f) -> Polynomial:
    if isinstance(f, PolyMap):
        if f.m != 1:
            raise ProblemError("a scalar function (m=1) is required")
        return f.components[0]
    return f


def _check_scalar_args(h: Polynomial, r: int, variant: str):
    if variant not in SMOOTHNESS:
        raise ProblemError(f"variant must be one of {SMOOTHNESS}")
    if not isinstance(r, int) or r < 1:
        raise ProblemError("r must be a positive integer")
    if h.degree > r:
        raise ProblemError(f"degree {h.degree} exceeds r={r}")
    if h.constant_term() != 0:
        raise ProblemError("f(0) must vanish")


def gradient_norm(h: Polynomial) -> PolyQuantity:
    """``|grad h(x)|`` as a sphere objective."""
    s = Polynomial.zero(h.nvars)
    for i in range(h.nvars):
        g = h.diff(i)
        s = s + g * g
    return PolyQuantity(s, 0.5)


def check_kuiper_kuo(f, r: int, variant: str = E_R,
                     cfg: SamplerConfig = SamplerConfig()) -> SufficiencyVerdict:
    """Kuiper-Kuo: ``|grad f| >= C|x|^(r-1)`` (E_r) or ``C|x|^(r-delta)`` (E_r_plus_1)."""
    h = _scalar(f)
    _check_scalar_args(h, r, variant)
    thr = float(r - 1 if variant == E_R else r)
    est = estimate_exponent(gradient_norm(h), cfg)
    return decide(est, thr, variant, f"Kuiper-Kuo |grad f|: {_growth_phrase(variant, thr)}")


def check_thom(f, r: int, variant: str = E_R,
               cfg: SamplerConfig = SamplerConfig()) -> SufficiencyVerdict:
    """Thom: ``sum_{i<j} (x_i f_j - x_j f_i)^2 + f^2 >= K|x|^(2r)``."""
    h = _scalar(f)
    _check_scalar_args(h, r, variant)
    thr = float(2 * r if variant == E_R else 2 * (r + 1))
    est = estimate_exponent(build_thom(h), cfg)
    return decide(est, thr, variant, f"Thom expression: {_growth_phrase(variant, thr)}")


# ---------------------------------------------------------------------------
# Kuo's condition on a horn neighbourhood


def horn_membership(f: PolyMap, x: Sequence[float], horn: HornSpec) -> bool:
    """``|f(x)| < sigma |x|^s``, decided in high precision."""
    f = f if isinstance(f, PolyMap) else PolyMap((f,))
    if len(x) != f.n:
        raise ValueError(f"dimension mismatch: x has {len(x)} coordinates, expected {f.n}")
    with hp_context():
        xs = [to_mpfr(a) for a in x]
        if all(a == 0 for a in xs):
            raise ValueError("horn membership is undefined at x = 0")
        return _in_horn_hp(f, xs, horn)


def _in_horn_hp(f: PolyMap, xs, horn: HornSpec) -> bool:
    f2 = gmpy2.mpfr(0)
    for c in f.components:
        v = c.compiled().hp(xs)
        f2 += v * v
    x2 = sum((a * a for a in xs), gmpy2.mpfr(0))
    # compare squares: |f|^2 < sigma^2 |x|^(2s)
    return bool(f2 < to_mpfr(horn.sigma) ** 2 * x2 ** to_mpfr(horn.s))


class KuoObjective:
    """``D(grad f_1, ..., grad f_m)`` restricted to a horn neighbourhood."""

    ny = 0

    def __init__(self, f: PolyMap, horn: HornSpec):
        self.f = f
        self.horn = horn
        self.nx = f.n
        self._kern = _MapKernels(f)

    def values(self, X, Y=None):
        _, J = self._kern.batch(np.asarray(X, dtype=float))
        return dist_D_batch(J)

    def feasible(self, X):
        F, _ = self._kern.batch(np.asarray(X, dtype=float))
        fn = np.sqrt((F * F).sum(axis=1))
        xn = np.sqrt((X * X).sum(axis=1))
        return fn < self.horn.sigma * xn ** self.horn.s

    def value_hp(self, x, y=None):
        _, J = self._kern.hp([to_mpfr(a) for a in x])
        return dist_D_hp(J)

    def feasible_hp(self, x):
        return _in_horn_hp(self.f, [to_mpfr(a) for a in x], self.horn)

    def evaluate(self, x, y=None) -> float:
        with hp_context():
            return float(self.value_hp(x))


def _map_norm2(f: PolyMap) -> Polynomial:
    s = Polynomial.zero(f.n)
    for c in f.components:
        s = s + c * c
    return s


def horn_starts(obj: KuoObjective, radius: float, cfg: SamplerConfig) -> np.ndarray:
    """Multistart points inside the horn at one radius.

    Uniform sphere samples already in the horn are kept; the others descend
    ``|f|^2`` on the sphere and are kept if they end inside it.  Every start
    is handled on its own, so start i's fate depends only on (seed, i).
    """
    X0, _ = sphere_starts(obj.nx, 0, radius, cfg.nstarts, cfg.seed)
    inside = obj.feasible(X0)
    out = X0.copy()
    outside = np.flatnonzero(~inside)
    if outside.size:
        Z, _, _ = compass_float(PolyQuantity(_map_norm2(obj.f), 1), X0[outside], None,
                                radius, cfg.local_steps)
        out[outside] = Z
    with hp_context():
        keep = [i for i in range(out.shape[0]) if obj.feasible_hp(list(out[i]))]
    return out[keep]


def check_kuo(f: PolyMap, r: int, horn: HornSpec | None = None,
              cfg: SamplerConfig = SamplerConfig()) -> SufficiencyVerdict:
    """Kuo's E_r condition: ``D(grad f_i) >= C|x|^(r-1)`` on the horn ``H_r(f; sigma)``.

    A horn that no radius reaches is treated as empty near 0, where the
    condition holds vacuously; when only a few radii reach it the verdict
    is INCONCLUSIVE.
    """
    f = f if isinstance(f, PolyMap) else PolyMap((f,))
    if f.n < f.m:
        raise ProblemError(f"need n >= m, got n={f.n} < m={f.m}")
    if not isinstance(r, int) or r < 1:
        raise ProblemError("r must be a positive integer")
    if f.degree > r:
        raise ProblemError(f"map has degree {f.degree} > r={r}")
    horn = horn or HornSpec(s=r, sigma=0.5)
    obj = KuoObjective(f, horn)
    thr = float(r - 1)
    crit = (f"Kuo D(grad f_i) on horn |f|<{horn.sigma:g}|x|^{horn.s:g}: "
            f"{_growth_phrase(E_R, thr)}")

    def one(radius):
        starts = horn_starts(obj, radius, cfg)
        if starts.shape[0] == 0:
            return None
        return min_on_sphere(obj, radius, cfg, starts=(starts, None))

    found = map_radii(one, cfg.radii())
    samples = [s for s in found if s is not None]
    skipped = len(found) - len(samples)
    if not samples:
        est = ExponentEstimate(math.nan, math.nan, math.nan, math.nan, (), False, 0)
        return SufficiencyVerdict(SUFFICIENT, crit + " (horn empty at every radius: vacuous)",
                                  math.nan, thr, math.nan, MIN_TOLERANCE, None, est, (EMPTY_HORN,))
    if len(samples) < MIN_HORN_RADII:
        est = fit_exponent(samples, min(cfg.tail, len(samples)))
        return SufficiencyVerdict(INCONCLUSIVE, crit, est.kappa_hat, thr, math.nan,
                                  MIN_TOLERANCE, None, est, (UNDETERMINED_EMPTY_HORN,))
    est = fit_exponent(samples, min(cfg.tail, len(samples)))
    flags = (SPARSE_HORN,) if skipped else ()
    return decide(est, thr, E_R, crit, flags)


# ---------------------------------------------------------------------------
# cross-validation and diagnostics


@dataclass(frozen=True)
class CrossValidation:
    verdicts: dict[str, SufficiencyVerdict]
    agree: bool

    @property
    def statuses(self) -> dict[str, str]:
        return {k: v.status for k, v in self.verdicts.items()}


def cross_validate(f: PolyMap, r: int, cfg: SamplerConfig = SamplerConfig(),
                   p: int = 2) -> CrossValidation:
    """R- and T-criteria next to Kuo's condition (and Kuiper-Kuo when m=1), class E_r."""
    f = f if isinstance(f, PolyMap) else PolyMap((f,))
    verdicts = {
        "R": analyze_jet(JetProblem(f, r, E_R, p, "R"), cfg),
        "T": analyze_jet(JetProblem(f, r, E_R, p, "T"), cfg),
        "Kuo": check_kuo(f, r, None, cfg),
    }
    if f.m == 1:
        verdicts["KuiperKuo"] = check_kuiper_kuo(f, r, E_R, cfg)
    decided = {v.status for v in verdicts.values() if v.status != INCONCLUSIVE}
    return CrossValidation(verdicts, len(decided) <= 1)


@dataclass(frozen=True)
class BLReport:
    """Sampled check of ``|grad h(x)| |x| >= theta |h(x)|``."""

    theta: float
    checked: int
    worst_ratio: float
    # violations at radii <= small_radius are failures, larger ones only warnings
    small_radius: float
    failures: tuple[tuple[float, ...], ...]
    warnings: tuple[tuple[float, ...], ...]

    @property
    def ok(self) -> bool:
        return not self.failures


def bochnak_lojasiewicz(h: Polynomial, cfg: SamplerConfig = SamplerConfig(),
                        theta: float = 0.5) -> BLReport:
    small = cfg.eps0 * cfg.rho ** 4
    grad = [h.diff(i).compiled() for i in range(h.nvars)]
    hc = h.compiled()
    worst = math.inf
    failures, warnings = [], []
    checked = 0
    for radius in cfg.radii():
        X, _ = sphere_starts(h.nvars, 0, radius, cfg.nstarts, cfg.seed)
        hv = np.abs(hc.batch(X))
        gn = np.sqrt(sum(g.batch(X) ** 2 for g in grad))
        lhs = gn * radius
        for i in range(X.shape[0]):
            checked += 1
            if hv[i] == 0:
                continue
            worst = min(worst, lhs[i] / hv[i])
            if lhs[i] < theta * hv[i]:
                (failures if radius <= small * (1 + 1e-12) else warnings).append(tuple(X[i]))
    return BLReport(theta, checked, worst, small, tuple(failures), tuple(warnings))
