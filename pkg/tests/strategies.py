"""Hypothesis strategies for random polynomials."""

from fractions import Fraction

from hypothesis import strategies as st

from jetcheck.polycore import Polynomial


@st.composite
def polynomials(draw, nvars=None, max_degree=5, max_terms=6, min_degree=0, rational=True):
    n = draw(st.integers(1, 4)) if nvars is None else nvars
    k = draw(st.integers(0, max_terms))
    terms = {}
    for _ in range(k):
        deg = draw(st.integers(min_degree, max_degree))
        mono = [0] * n
        for _ in range(deg):
            mono[draw(st.integers(0, n - 1))] += 1
        num = draw(st.integers(-9, 9))
        den = draw(st.integers(1, 4)) if rational else 1
        terms[tuple(mono)] = Fraction(num, den)
    return Polynomial(terms, n)


def germs(nvars=None, max_degree=5, max_terms=6):
    """Polynomials vanishing at the origin."""
    return polynomials(nvars, max_degree, max_terms, min_degree=1)
