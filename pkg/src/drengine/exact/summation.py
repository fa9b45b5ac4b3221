"""Closed-form summation of polynomials over integer ranges (Faulhaber)."""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Tuple

from .poly import MultiPoly


@lru_cache(maxsize=None)
def bernoulli_plus(n: int) -> Tuple[Fraction, ...]:
    """B_0..B_n with the convention B_1 = +1/2 (Akiyama-Tanigawa)."""
    a = [Fraction(0)] * (n + 1)
    out = []
    for m in range(n + 1):
        a[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
        out.append(a[0])
    return tuple(out)


@lru_cache(maxsize=None)
def _power_sum_coeffs(p: int) -> Tuple[Fraction, ...]:
    # sum_{j=1}^N j^p = 1/(p+1) sum_i C(p+1, i) B_i^+ N^(p+1-i)
    b = bernoulli_plus(p)
    coeffs = [Fraction(0)] * (p + 2)
    for i in range(p + 1):
        coeffs[p + 1 - i] += Fraction(comb(p + 1, i)) * b[i] / (p + 1)
    return tuple(coeffs)


def power_sum(p: int, upper: str) -> MultiPoly:
    """sum_{j=1}^{upper} j**p as a polynomial in ``upper``."""
    return MultiPoly({((upper, e),) if e else (): c for e, c in enumerate(_power_sum_coeffs(p)) if c})


def sum_range_closed_form(P: MultiPoly, var: str = "j", upper: str = "a") -> MultiPoly:
    """F with F(upper) = sum_{var=1}^{upper} P for every integer upper >= 0.

    Other variables of ``P`` are parameters and may include ``upper``
    itself.
    """
    out = MultiPoly()
    for e, coeff in P.coefficients_in(var).items():
        out = out + coeff * power_sum(e, upper)
    return out
