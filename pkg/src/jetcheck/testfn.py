"""Test quantities R_p, T_p, R*_p, T*_p, the Thom expression, and Kuo's D functions.

Every quantity carries three evaluation routes: an exact symbolic polynomial
(only for even p), a vectorised float64 kernel used by the sphere search, and
a high-precision scalar route used wherever cancellation matters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import gmpy2
import numpy as np

from .polycore import FusedKernel, Polynomial, PolyMap, hp_context, hp_power_table, to_mpfr

KINDS = ("R", "T", "Rstar", "Tstar", "Thom")
STAR_KINDS = ("Rstar", "Tstar", "Thom")


def _check_p(p):
    if not isinstance(p, int) or p < 1:
        raise ValueError(f"p must be a positive integer, got {p!r}")


def _check_even(p):
    _check_p(p)
    if p % 2:
        raise ValueError(f"p={p} is odd; symbolic construction needs even p, use eval_numeric")


class _MapKernels:
    """Float and high-precision evaluation of f and df for one PolyMap."""

    def __init__(self, f: PolyMap):
        self.f = f
        jac = f.jacobian()
        self.comp = [c.compiled() for c in f.components]
        self.jac = [[g.compiled() for g in row] for row in jac]
        self.fused = FusedKernel(list(f.components) + [g for row in jac for g in row])
        self.maxdeg = max([c.maxdeg for c in self.comp] + [1])

    def batch(self, X):
        """Return ``F`` of shape (S, m) and ``J`` of shape (S, m, n)."""
        m, n = self.f.m, self.f.n
        out = self.fused.batch(X)
        return out[:, :m], out[:, m:].reshape(-1, m, n)

    def hp(self, x):
        pw = hp_power_table(x, self.maxdeg)
        F = [c.hp(x, pw) for c in self.comp]
        J = [[g.hp(x, pw) for g in row] for row in self.jac]
        return F, J


def _hp_pow(v, p):
    """``|v|**p`` for an mpfr ``v`` and real ``p``."""
    v = abs(v)
    if isinstance(p, int):
        return v ** p
    if v == 0:
        return gmpy2.mpfr(0)
    return gmpy2.exp(gmpy2.log(v) * to_mpfr(p))


@dataclass(frozen=True, eq=False)
class TestQuantity:
    """One of R_p, T_p, R*_p, T*_p or the Thom expression for a fixed map."""

    __test__ = False

    kind: str
    p: int
    f: PolyMap
    symbolic: Polynomial | None = None
    _kern: _MapKernels = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        _check_p(self.p)
        if self.kind in STAR_KINDS and self.f.m != 1:
            raise ValueError(f"{self.kind} is defined for scalar functions (m=1)")
        object.__setattr__(self, "_kern", _MapKernels(self.f))

    @property
    def nx(self) -> int:
        return self.f.n

    @property
    def ny(self) -> int:
        return 0 if self.kind in STAR_KINDS else self.f.m

    @property
    def uses_y(self) -> bool:
        return self.ny > 0

    def values(self, X: np.ndarray, Y: np.ndarray | None = None) -> np.ndarray:
        """Float64 values at rows of ``X`` (and ``Y``)."""
        F, J = self._kern.batch(np.asarray(X, dtype=float))
        return _formula_batch(self.kind, self.p, np.asarray(X, dtype=float), F, J,
                              None if Y is None else np.asarray(Y, dtype=float))

    def value_hp(self, x: Sequence, y: Sequence | None = None):
        """High-precision value; call inside :func:`hp_context`."""
        xs = [to_mpfr(v) for v in x]
        ys = None if y is None else [to_mpfr(v) for v in y]
        F, J = self._kern.hp(xs)
        return _formula_hp(self.kind, self.p, xs, F, J, ys)

    def evaluate(self, x: Sequence, y: Sequence | None = None) -> float:
        """Value at ``(x, y)`` computed at high precision and rounded to float."""
        if len(x) != self.f.n:
            raise ValueError(f"dimension mismatch: x has {len(x)} coordinates, expected {self.f.n}")
        if self.uses_y:
            if y is None or len(y) != self.f.m:
                raise ValueError(f"dimension mismatch: y must have {self.f.m} coordinates")
        else:
            y = None
        with hp_context():
            return float(self.value_hp(x, y))

    def __call__(self, x, y=None) -> float:
        return self.evaluate(x, y)


def _formula_batch(kind, p, X, F, J, Y):
    xn = np.sqrt((X * X).sum(axis=1))
    if kind in STAR_KINDS:
        fv = F[:, 0]
        g = J[:, 0, :]
        if kind == "Thom":
            n = X.shape[1]
            wedge = np.zeros(X.shape[0])
            for i in range(n):
                for j in range(i + 1, n):
                    w = X[:, i] * g[:, j] - X[:, j] * g[:, i]
                    wedge += w * w
            return wedge + fv * fv
        gn = np.sqrt((g * g).sum(axis=1))
        out = np.abs(fv) ** p + gn ** p * xn ** p
        if kind == "Tstar":
            out = out - np.abs((g * X).sum(axis=1)) ** p
        return out
    if Y is None:
        raise ValueError(f"{kind} needs y")
    V = (Y[:, :, None] * J).sum(axis=1)
    fn = np.sqrt((F * F).sum(axis=1))
    yn = np.sqrt((Y * Y).sum(axis=1))
    vn = np.sqrt((V * V).sum(axis=1))
    out = fn ** p * yn ** p + vn ** p * xn ** p
    if kind == "T":
        out = out - np.abs((V * X).sum(axis=1)) ** p
    return out


def _hp_norm2(v):
    s = gmpy2.mpfr(0)
    for a in v:
        s += a * a
    return s


def _hp_norm_pow(v, p):
    """``|v|**p`` for a vector of mpfr, exact in the even case."""
    s = _hp_norm2(v)
    if p % 2 == 0:
        return s ** (p // 2)
    return gmpy2.sqrt(s) ** p


def _formula_hp(kind, p, x, F, J, y):
    if kind in STAR_KINDS:
        fv = F[0]
        g = J[0]
        if kind == "Thom":
            n = len(x)
            s = fv * fv
            for i in range(n):
                for j in range(i + 1, n):
                    w = x[i] * g[j] - x[j] * g[i]
                    s += w * w
            return s
        out = _hp_pow(fv, p) + _hp_norm_pow(g, p) * _hp_norm_pow(x, p)
        if kind == "Tstar":
            dot = gmpy2.mpfr(0)
            for a, b in zip(g, x):
                dot += a * b
            out -= _hp_pow(dot, p)
        return out
    n = len(x)
    v = [gmpy2.mpfr(0)] * n
    for j, yj in enumerate(y):
        row = J[j]
        v = [vi + yj * row[i] for i, vi in enumerate(v)]
    out = _hp_norm_pow(F, p) * _hp_norm_pow(y, p) + _hp_norm_pow(v, p) * _hp_norm_pow(x, p)
    if kind == "T":
        dot = gmpy2.mpfr(0)
        for a, b in zip(v, x):
            dot += a * b
        out -= _hp_pow(dot, p)
    return out


# ---------------------------------------------------------------------------
# symbolic construction


def _jt_y(f: PolyMap) -> list[Polynomial]:
    """Components of ``(df)^*(x) y`` as polynomials over (x, y)."""
    n, m = f.n, f.m
    N = n + m
    out = [Polynomial.zero(N) for _ in range(n)]
    for j, row in enumerate(f.jacobian()):
        yj = Polynomial.variable(n + j, N)
        for i, g in enumerate(row):
            out[i] = out[i] + g.embed(N) * yj
    return out


def _symbolic_RT(f: PolyMap, p: int, with_bracket: bool) -> Polynomial:
    n, m = f.n, f.m
    N = n + m
    h = p // 2
    f2 = Polynomial.zero(N)
    for c in f.components:
        ce = c.embed(N)
        f2 = f2 + ce * ce
    y2 = Polynomial.sum_of_squares(N, n, m)
    x2 = Polynomial.sum_of_squares(N, 0, n)
    v = _jt_y(f)
    v2 = Polynomial.zero(N)
    for vi in v:
        v2 = v2 + vi * vi
    out = f2 ** h * y2 ** h + v2 ** h * x2 ** h
    if with_bracket:
        dot = Polynomial.zero(N)
        for i, vi in enumerate(v):
            dot = dot + vi * Polynomial.variable(i, N)
        out = out - dot ** p
    return out


def _symbolic_star(f: Polynomial, p: int, with_bracket: bool) -> Polynomial:
    n = f.nvars
    h = p // 2
    g = [f.diff(i) for i in range(n)]
    g2 = Polynomial.zero(n)
    for gi in g:
        g2 = g2 + gi * gi
    x2 = Polynomial.sum_of_squares(n)
    out = f ** p + g2 ** h * x2 ** h
    if with_bracket:
        dot = Polynomial.zero(n)
        for i, gi in enumerate(g):
            dot = dot + gi * Polynomial.variable(i, n)
        out = out - dot ** p
    return out


def _as_map(f) -> PolyMap:
    if isinstance(f, PolyMap):
        return f
    if isinstance(f, Polynomial):
        return PolyMap((f,))
    raise TypeError("expected a Polynomial or PolyMap")


def build_R(f: PolyMap, p: int = 2) -> TestQuantity:
    """``R_p(f;x,y) = |f(x)|^p |y|^p + |(df)^*(x) y|^p |x|^p`` as a polynomial over (x, y)."""
    f = _as_map(f)
    _check_even(p)
    return TestQuantity("R", p, f, _symbolic_RT(f, p, False))


def build_T(f: PolyMap, p: int = 2) -> TestQuantity:
    """``T_p = R_p - <(df)^*(x) y, x>^p``."""
    f = _as_map(f)
    _check_even(p)
    return TestQuantity("T", p, f, _symbolic_RT(f, p, True))


def _scalar(f) -> Polynomial:
    if isinstance(f, PolyMap):
        if f.m != 1:
            raise ValueError("scalar function expected (m=1)")
        return f.components[0]
    return f


def build_Rstar(f: Polynomial, p: int = 2) -> TestQuantity:
    f = _scalar(f)
    _check_even(p)
    return TestQuantity("Rstar", p, PolyMap((f,)), _symbolic_star(f, p, False))


def build_Tstar(f: Polynomial, p: int = 2) -> TestQuantity:
    f = _scalar(f)
    _check_even(p)
    return TestQuantity("Tstar", p, PolyMap((f,)), _symbolic_star(f, p, True))


def build_thom(f: Polynomial) -> TestQuantity:
    """``sum_{i<j} (x_i df/dx_j - x_j df/dx_i)^2 + f^2``."""
    f = _scalar(f)
    n = f.nvars
    g = [f.diff(i) for i in range(n)]
    out = f * f
    for i in range(n):
        xi = Polynomial.variable(i, n)
        for j in range(i + 1, n):
            w = xi * g[j] - Polynomial.variable(j, n) * g[i]
            out = out + w * w
    return TestQuantity("Thom", 2, PolyMap((f,)), out)


def test_quantity(kind: str, f, p: int = 2) -> TestQuantity:
    """Any kind at any positive p; the symbolic form is attached when p is even."""
    _check_p(p)
    if kind == "Thom":
        return build_thom(f)
    if p % 2 == 0:
        return {"R": build_R, "T": build_T, "Rstar": build_Rstar, "Tstar": build_Tstar}[kind](f, p)
    fm = _as_map(f)
    return TestQuantity(kind, p, fm, None)


test_quantity.__test__ = False


def eval_numeric(kind: str, f, p: int, x: Sequence[float], y: Sequence[float] | None = None) -> float:
    """Defining formula in float64 with Euclidean norms and real powers."""
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    _check_p(p)
    fm = _as_map(f)
    x = np.asarray(x, dtype=float)
    if x.shape != (fm.n,):
        raise ValueError(f"dimension mismatch: x has {x.size} coordinates, expected {fm.n}")
    if kind in STAR_KINDS:
        if fm.m != 1:
            raise ValueError(f"{kind} is defined for scalar functions (m=1)")
        Y = None
    else:
        y = np.asarray(y if y is not None else [], dtype=float)
        if y.shape != (fm.m,):
            raise ValueError(f"dimension mismatch: y has {y.size} coordinates, expected {fm.m}")
        Y = y[None, :]
    kern = _MapKernels(fm)
    F, J = kern.batch(x[None, :])
    return float(_formula_batch(kind, p, x[None, :], F, J, Y)[0])


# ---------------------------------------------------------------------------
# Kuo's functions


def _as_columns(vectors) -> np.ndarray:
    A = np.asarray(vectors, dtype=float)
    if A.ndim != 2 or A.shape[0] == 0:
        raise ValueError("need a nonempty list of vectors")
    m, n = A.shape
    if m > n:
        raise ValueError(f"need m <= n, got {m} vectors in R^{n}")
    return A.T


def dist_Dtilde(vectors: Sequence[Sequence[float]]) -> float:
    """``min |sum y_i v_i|`` over the unit sphere in y: the smallest singular value."""
    A = _as_columns(vectors)
    if A.shape[1] == 1:
        return float(np.linalg.norm(A[:, 0]))
    return float(np.linalg.svd(A, compute_uv=False)[-1])


def _residual_norm(v: np.ndarray, B: np.ndarray, scale: float) -> float:
    """Distance of ``v`` to the column span of ``B`` by a rank-revealing least-squares fit."""
    if B.shape[1] == 0:
        return float(np.linalg.norm(v))
    U, s, _ = np.linalg.svd(B, full_matrices=False)
    keep = s > 1e-12 * scale
    Ur = U[:, keep]
    r = v - Ur @ (Ur.T @ v)
    return float(np.linalg.norm(r))


def dist_D(vectors: Sequence[Sequence[float]]) -> float:
    """Minimum over i of the distance from ``v_i`` to the span of the others."""
    A = _as_columns(vectors)
    m = A.shape[1]
    if m == 1:
        return float(np.linalg.norm(A[:, 0]))
    scale = float(np.max(np.linalg.norm(A, axis=0)))
    return min(_residual_norm(A[:, i], np.delete(A, i, axis=1), scale) for i in range(m))


def dist_D_batch(J: np.ndarray) -> np.ndarray:
    """``dist_D`` for a stack of vector tuples ``J`` of shape (S, m, n)."""
    S, m, n = J.shape
    if m == 1:
        return np.sqrt((J[:, 0, :] ** 2).sum(axis=1))
    scale = np.sqrt((J ** 2).sum(axis=2)).max(axis=1)
    best = np.full(S, np.inf)
    for i in range(m):
        v = J[:, i, :]
        others = np.delete(J, i, axis=1).transpose(0, 2, 1)  # (S, n, m-1)
        U, s, _ = np.linalg.svd(others, full_matrices=False)
        keep = s > 1e-12 * scale[:, None]
        U = U * keep[:, None, :]
        proj = np.einsum("snk,sk->sn", U, np.einsum("snk,sn->sk", U, v))
        r = v - proj
        best = np.minimum(best, np.sqrt((r * r).sum(axis=1)))
    return best


def dist_D_hp(vectors):
    """High-precision ``dist_D`` by modified Gram-Schmidt; call inside :func:`hp_context`."""
    vs = [[to_mpfr(a) for a in v] for v in vectors]
    m = len(vs)
    if m == 1:
        return gmpy2.sqrt(_hp_norm2(vs[0]))
    scale = max(gmpy2.sqrt(_hp_norm2(v)) for v in vs)
    tol = scale * gmpy2.mpfr(2) ** (-(gmpy2.get_context().precision - 56))
    best = None
    for i in range(m):
        basis = []
        for j in range(m):
            if j == i:
                continue
            w = list(vs[j])
            for q in basis:
                d = sum((a * b for a, b in zip(w, q)), gmpy2.mpfr(0))
                w = [a - d * b for a, b in zip(w, q)]
            nw = gmpy2.sqrt(_hp_norm2(w))
            if nw > tol:
                basis.append([a / nw for a in w])
        r = list(vs[i])
        for q in basis:
            d = sum((a * b for a, b in zip(r, q)), gmpy2.mpfr(0))
            r = [a - d * b for a, b in zip(r, q)]
        dist = gmpy2.sqrt(_hp_norm2(r))
        if dist <= tol:
            dist = gmpy2.mpfr(0)
        best = dist if best is None else min(best, dist)
    return best
