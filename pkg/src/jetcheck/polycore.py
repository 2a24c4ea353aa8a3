"""Sparse multivariate polynomials with exact rational coefficients.

Variables are positional: ``x1..xn`` for the domain and, for polynomials
living on R^{n+m}, ``y1..ym`` appended after them.  Terms are kept in graded
lexicographic order so that printing and hashing are deterministic.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import gmpy2
import numpy as np

Monomial = tuple[int, ...]

# degree of the zero polynomial
ZERO_DEGREE = -math.inf

# working precision (bits) of the high-precision evaluation path
HP_BITS = 256


class ParseError(ValueError):
    """Polynomial text does not conform to the grammar."""

    def __init__(self, message: str, text: str, pos: int, line: int = 1):
        self.message = message
        self.text = text
        self.pos = pos
        self.line = line
        self.column = pos + 1
        super().__init__(f"{message} (line {line}, column {self.column})")


def hp_context():
    """Context manager switching gmpy2 to the high-precision working mode."""
    return gmpy2.context(gmpy2.get_context(), precision=HP_BITS)


def _grlex_key(mono: Monomial):
    return (sum(mono), tuple(-e for e in mono))


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    if isinstance(c, float):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError(f"unsupported coefficient type {type(c).__name__}")


class Polynomial:
    """Immutable sparse polynomial in ``nvars`` variables over Q."""

    __slots__ = ("nvars", "_terms", "_hash", "_compiled")

    def __init__(self, terms: Mapping[Monomial, object] | Iterable = (), nvars: int = 1):
        if nvars < 1:
            raise ValueError("nvars must be positive")
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Monomial, Fraction] = {}
        for mono, c in items:
            mono = tuple(int(e) for e in mono)
            if len(mono) != nvars:
                raise ValueError(f"monomial {mono} does not have {nvars} exponents")
            if any(e < 0 for e in mono):
                raise ValueError(f"negative exponent in {mono}")
            acc[mono] = acc.get(mono, Fraction(0)) + _as_fraction(c)
        self.nvars = nvars
        self._terms = {m: acc[m] for m in sorted(acc, key=_grlex_key) if acc[m] != 0}
        self._hash = None
        self._compiled = None

    # construction helpers

    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls({}, nvars)

    @classmethod
    def constant(cls, c, nvars: int) -> "Polynomial":
        return cls({(0,) * nvars: c}, nvars)

    @classmethod
    def variable(cls, index: int, nvars: int) -> "Polynomial":
        """The coordinate function for the 0-based ``index``."""
        if not 0 <= index < nvars:
            raise ValueError(f"variable index {index} out of range for {nvars} variables")
        mono = [0] * nvars
        mono[index] = 1
        return cls({tuple(mono): 1}, nvars)

    @classmethod
    def sum_of_squares(cls, nvars: int, start: int = 0, count: int | None = None) -> "Polynomial":
        """``sum x_i^2`` over the variables ``start .. start+count-1``."""
        count = nvars - start if count is None else count
        terms = {}
        for i in range(start, start + count):
            mono = [0] * nvars
            mono[i] = 2
            terms[tuple(mono)] = 1
        return cls(terms, nvars)

    # basic properties

    @property
    def terms(self) -> Mapping[Monomial, Fraction]:
        return MappingProxyType(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self):
        if not self._terms:
            return ZERO_DEGREE
        return max(sum(m) for m in self._terms)

    def constant_term(self) -> Fraction:
        return self._terms.get((0,) * self.nvars, Fraction(0))

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.nvars == other.nvars and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self == Polynomial.constant(other, self.nvars)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, tuple(self._terms.items())))
        return self._hash

    def __repr__(self):
        return f"Polynomial({self.to_string()!r}, nvars={self.nvars})"

    def __str__(self):
        return self.to_string()

    # arithmetic

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise ValueError(f"dimension mismatch: {self.nvars} vs {other.nvars} variables")
            return other
        if isinstance(other, (int, Fraction)):
            return Polynomial.constant(other, self.nvars)
        raise TypeError(f"cannot combine Polynomial with {type(other).__name__}")

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, 0) + c
        return Polynomial(out, self.nvars)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({m: -c for m, c in self._terms.items()}, self.nvars)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return Polynomial({m: c * other for m, c in self._terms.items()}, self.nvars)
        other = self._coerce(other)
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                out[m] = out.get(m, 0) + c1 * c2
        return Polynomial(out, self.nvars)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a nonnegative integer")
        result = Polynomial.constant(1, self.nvars)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    # calculus and jets

    def diff(self, i: int) -> "Polynomial":
        """Exact partial derivative with respect to the 0-based variable ``i``."""
        if not 0 <= i < self.nvars:
            raise ValueError(f"variable index {i} out of range")
        out = {}
        for m, c in self._terms.items():
            e = m[i]
            if e:
                mm = list(m)
                mm[i] = e - 1
                out[tuple(mm)] = c * e
        return Polynomial(out, self.nvars)

    def truncate(self, r: int) -> "Polynomial":
        if r < 0:
            raise ValueError("truncation order must be nonnegative")
        return Polynomial({m: c for m, c in self._terms.items() if sum(m) <= r}, self.nvars)

    def embed(self, nvars: int, offset: int = 0) -> "Polynomial":
        """Re-home this polynomial into ``nvars`` variables, its variable i becoming ``offset+i``."""
        if offset < 0 or offset + self.nvars > nvars:
            raise ValueError("embedding does not fit")
        out = {}
        for m, c in self._terms.items():
            mm = [0] * nvars
            mm[offset:offset + self.nvars] = m
            out[tuple(mm)] = c
        return Polynomial(out, nvars)

    # evaluation

    def evaluate(self, x: Sequence[float]) -> float:
        """Floating-point value at ``x``; coefficients are rounded per term."""
        if len(x) != self.nvars:
            raise ValueError(f"dimension mismatch: point has {len(x)} coordinates, expected {self.nvars}")
        xs = [float(v) for v in x]
        total = 0.0
        for m, c in self._terms.items():
            t = float(c)
            for v, e in zip(xs, m):
                if e:
                    t *= v ** e
            total += t
        return total

    def compiled(self) -> "CompiledPoly":
        if self._compiled is None:
            self._compiled = CompiledPoly(self)
        return self._compiled

    # printing

    def to_string(self, nx: int | None = None) -> str:
        """Canonical text in the input grammar; variables past ``nx`` print as y's."""
        if not self._terms:
            return "0"
        nx = self.nvars if nx is None else nx
        parts = []
        for m, c in self._terms.items():
            factors = []
            for i, e in enumerate(m):
                if not e:
                    continue
                name = f"x{i + 1}" if i < nx else f"y{i - nx + 1}"
                factors.append(name if e == 1 else f"{name}^{e}")
            mag = abs(c)
            if not factors:
                body = str(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = f"{mag}*" + "*".join(factors)
            parts.append((c < 0, body))
        neg, body = parts[0]
        out = ("-" if neg else "") + body
        for neg, body in parts[1:]:
            out += (" - " if neg else " + ") + body
        return out


class CompiledPoly:
    """Evaluation kernels for a fixed polynomial: float64 batches and high precision."""

    __slots__ = ("nvars", "maxdeg", "_fused", "_hp_terms", "_fr_terms")

    def __init__(self, poly: Polynomial):
        self.nvars = poly.nvars
        self._fused = FusedKernel([poly])
        self.maxdeg = self._fused.maxdeg
        self._fr_terms = [(c, m) for m, c in poly.terms.items()]
        self._hp_terms = None

    def batch(self, X: np.ndarray) -> np.ndarray:
        """Values at the rows of ``X`` (shape ``(S, nvars)``)."""
        return self._fused.batch(X)[:, 0]

    def hp(self, x: Sequence, powers: list[list] | None = None):
        """High-precision value (gmpy2 mpfr) at ``x``; call inside :func:`hp_context`."""
        if self._hp_terms is None:
            self._hp_terms = [(gmpy2.mpfr(gmpy2.mpq(c.numerator, c.denominator)), m)
                              for c, m in self._fr_terms]
        if powers is None:
            powers = hp_power_table(x, self.maxdeg)
        total = gmpy2.mpfr(0)
        for c, m in self._hp_terms:
            t = c
            for j, e in enumerate(m):
                if e:
                    t = t * powers[j][e]
            total += t
        return total


class FusedKernel:
    """Float64 evaluation of several polynomials sharing one monomial table.

    Only elementwise products and row-wise sums are used, so each row's result
    is independent of how many rows are evaluated together.
    """

    def __init__(self, polys: Sequence[Polynomial]):
        if not polys:
            raise ValueError("no polynomials")
        self.nvars = polys[0].nvars
        monos = sorted({m for p in polys for m in p.terms}, key=_grlex_key)
        index = {m: k for k, m in enumerate(monos)}
        U = np.array(monos, dtype=np.int64).reshape(len(monos), self.nvars)
        self.nmono = len(monos)
        self.maxdeg = int(U.max()) if len(monos) else 0
        self._vars = []
        for j in range(self.nvars):
            mask = np.flatnonzero(U[:, j])
            if mask.size:
                self._vars.append((j, mask, U[mask, j]))
        self._outputs = []
        for p in polys:
            idx = np.array([index[m] for m in p.terms], dtype=np.int64)
            c = np.array([float(v) for v in p.terms.values()], dtype=float)
            self._outputs.append((idx, c))

    def batch(self, X: np.ndarray) -> np.ndarray:
        """Array of shape ``(S, len(polys))``."""
        X = np.asarray(X, dtype=float)
        S = X.shape[0]
        out = np.zeros((S, len(self._outputs)))
        if not self.nmono:
            return out
        M = np.ones((S, self.nmono))
        for j, mask, e in self._vars:
            tab = np.empty((S, self.maxdeg + 1))
            tab[:, 0] = 1.0
            col = X[:, j]
            for k in range(1, int(e.max()) + 1):
                tab[:, k] = tab[:, k - 1] * col
            M[:, mask] *= tab[:, e]
        for k, (idx, c) in enumerate(self._outputs):
            if idx.size:
                out[:, k] = (M[:, idx] * c).sum(axis=1)
        return out


def hp_power_table(x: Sequence, maxdeg: int) -> list[list]:
    out = []
    for v in x:
        v = to_mpfr(v)
        row = [gmpy2.mpfr(1)]
        for _ in range(maxdeg):
            row.append(row[-1] * v)
        out.append(row)
    return out


def to_mpfr(v):
    if isinstance(v, Fraction):
        return gmpy2.mpfr(gmpy2.mpq(v.numerator, v.denominator))
    return gmpy2.mpfr(v)


# ---------------------------------------------------------------------------
# grammar

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<var>[xy])(?P<idx>\d+)|(?P<op>[-+*/^−]))")


def parse_poly(text: str, nvars: int, *, nx: int | None = None, line: int = 1) -> Polynomial:
    """Parse ``text`` into a Polynomial over ``nvars`` variables.

    With ``nx`` given, ``x1..x_nx`` are the first variables and ``y1..`` the rest;
    otherwise only x-variables are accepted.
    """
    if nvars < 1:
        raise ValueError("nvars must be positive")
    nx_ = nvars if nx is None else nx
    ny = nvars - nx_
    tokens = _tokenize(text, line)
    pos = 0
    terms: dict[Monomial, Fraction] = {}

    def peek():
        return tokens[pos] if pos < len(tokens) else None

    def fail(msg, tok=None):
        at = tok[2] if tok is not None else len(text)
        raise ParseError(msg, text, at, line)

    if not tokens:
        fail("empty polynomial")
    first = True
    while pos < len(tokens):
        sign = 1
        tok = peek()
        if tok[0] == "op" and tok[1] in "+-":
            sign = -1 if tok[1] == "-" else 1
            pos += 1
        elif not first:
            fail("expected '+' or '-' between terms", tok)
        first = False

        coeff = Fraction(1)
        mono = [0] * nvars
        tok = peek()
        if tok is None:
            fail("expected a term")
        have_body = False
        if tok[0] == "num":
            num = int(tok[1])
            pos += 1
            if peek() is not None and peek()[0] == "op" and peek()[1] == "/":
                pos += 1
                den_tok = peek()
                if den_tok is None or den_tok[0] != "num":
                    fail("expected integer denominator", den_tok)
                if int(den_tok[1]) == 0:
                    fail("zero denominator", den_tok)
                coeff = Fraction(num, int(den_tok[1]))
                pos += 1
            else:
                coeff = Fraction(num)
            have_body = True
            tok = peek()
            if tok is not None and tok[0] == "op" and tok[1] == "*":
                pos += 1
                tok = peek()
                if tok is None or tok[0] != "var":
                    fail("expected a variable after '*'", tok)
        while tok is not None and tok[0] == "var":
            kind, idx = tok[1]
            k = int(idx)
            limit = nx_ if kind == "x" else ny
            if k < 1 or k > limit:
                fail(f"variable index out of range: {kind}{k} (have {limit} {kind}-variables)", tok)
            var = k - 1 if kind == "x" else nx_ + k - 1
            pos += 1
            e = 1
            tok = peek()
            if tok is not None and tok[0] == "op" and tok[1] == "^":
                pos += 1
                etok = peek()
                if etok is not None and etok[0] == "op" and etok[1] == "-":
                    fail("negative exponent", etok)
                if etok is None or etok[0] != "num":
                    fail("expected integer exponent", etok)
                e = int(etok[1])
                if e < 1:
                    fail("exponent must be at least 1", etok)
                pos += 1
            mono[var] += e
            have_body = True
            tok = peek()
            if tok is not None and tok[0] == "op" and tok[1] == "*":
                pos += 1
                tok = peek()
                if tok is None or tok[0] != "var":
                    fail("expected a variable after '*'", tok)
        if not have_body:
            fail("expected a coefficient or variable", tok)
        m = tuple(mono)
        terms[m] = terms.get(m, Fraction(0)) + sign * coeff
    return Polynomial(terms, nvars)


def _tokenize(text: str, line: int):
    tokens = []
    i = 0
    while i < len(text):
        if text[i].isspace():
            i += 1
            continue
        mt = _TOKEN.match(text, i)
        if mt is None or mt.end() == i:
            raise ParseError(f"unexpected character {text[i]!r}", text, i, line)
        start = mt.start() + (len(mt.group(0)) - len(mt.group(0).lstrip()))
        if mt.group("num") is not None:
            tokens.append(("num", mt.group("num"), start))
        elif mt.group("var") is not None:
            tokens.append(("var", (mt.group("var"), mt.group("idx")), start))
        else:
            op = mt.group("op").replace("−", "-")
            tokens.append(("op", op, start))
        i = mt.end()
    return tokens


# ---------------------------------------------------------------------------
# module-level operations


def evaluate(poly: Polynomial, x: Sequence[float]) -> float:
    return poly.evaluate(x)


def gradient(poly: Polynomial) -> tuple[Polynomial, ...]:
    return tuple(poly.diff(i) for i in range(poly.nvars))


def truncate_jet(poly: Polynomial, r: int) -> Polynomial:
    return poly.truncate(r)


def combine(a: Polynomial, b: Polynomial, op: str) -> Polynomial:
    if a.nvars != b.nvars:
        raise ValueError(f"dimension mismatch: {a.nvars} vs {b.nvars} variables")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown operation {op!r}")


def power(a: Polynomial, k: int) -> Polynomial:
    return a ** k


@dataclass(frozen=True)
class PolyMap:
    """A polynomial map-germ (R^n, 0) -> (R^m, 0)."""

    components: tuple[Polynomial, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise ValueError("a map needs at least one component")
        n = comps[0].nvars
        for k, c in enumerate(comps):
            if c.nvars != n:
                raise ValueError(f"component {k + 1} has {c.nvars} variables, expected {n}")
            if c.constant_term() != 0:
                raise ValueError(f"component {k + 1} does not vanish at the origin")

    @classmethod
    def parse(cls, texts: Sequence[str], n: int) -> "PolyMap":
        return cls(tuple(parse_poly(t, n, line=i + 1) for i, t in enumerate(texts)))

    @property
    def n(self) -> int:
        return self.components[0].nvars

    @property
    def m(self) -> int:
        return len(self.components)

    @property
    def degree(self):
        return max(c.degree for c in self.components)

    def jacobian(self) -> tuple[tuple[Polynomial, ...], ...]:
        """Rows are the gradients of the components."""
        return tuple(gradient(c) for c in self.components)

    def truncate(self, r: int) -> "PolyMap":
        return PolyMap(tuple(c.truncate(r) for c in self.components))

    def scaled(self, c) -> "PolyMap":
        c = _as_fraction(c)
        return PolyMap(tuple(comp * c for comp in self.components))

    def permuted(self, order: Sequence[int]) -> "PolyMap":
        return PolyMap(tuple(self.components[i] for i in order))

    def evaluate(self, x: Sequence[float]) -> np.ndarray:
        return np.array([c.evaluate(x) for c in self.components])

    def to_strings(self) -> list[str]:
        return [c.to_string() for c in self.components]


def jacobian_transpose_apply(f: PolyMap, x: Sequence[float], y: Sequence[float]) -> np.ndarray:
    """``(df)^*(x) y = sum_j y_j grad f_j(x)``."""
    if len(x) != f.n:
        raise ValueError(f"dimension mismatch: x has {len(x)} coordinates, expected {f.n}")
    if len(y) != f.m:
        raise ValueError(f"dimension mismatch: y has {len(y)} coordinates, expected {f.m}")
    out = np.zeros(f.n)
    for yj, row in zip(y, f.jacobian()):
        out += float(yj) * np.array([g.evaluate(x) for g in row])
    return out
