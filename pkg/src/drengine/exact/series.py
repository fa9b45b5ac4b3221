"""Truncated power series in one formal variable."""

from __future__ import annotations

from fractions import Fraction
from math import comb, factorial
from typing import Dict, List, Sequence, Tuple

from ..errors import DomainError


class PSeries:
    """Power series ``sum_m coeffs[m] t^m`` known up to ``t^order``."""

    __slots__ = ("order", "coeffs")

    def __init__(self, coeffs: Sequence, order: int):
        if order < 0:
            raise DomainError("truncation order must be >= 0")
        coeffs = list(coeffs)[: order + 1]
        self.order = order
        self.coeffs: List = coeffs + [Fraction(0)] * (order + 1 - len(coeffs))

    def __getitem__(self, m: int):
        return self.coeffs[m] if 0 <= m <= self.order else Fraction(0)

    def __add__(self, other: "PSeries") -> "PSeries":
        order = min(self.order, other.order)
        return PSeries([self[m] + other[m] for m in range(order + 1)], order)

    def __sub__(self, other: "PSeries") -> "PSeries":
        order = min(self.order, other.order)
        return PSeries([self[m] - other[m] for m in range(order + 1)], order)

    def __mul__(self, other):
        if not isinstance(other, PSeries):
            return PSeries([c * other for c in self.coeffs], self.order)
        order = min(self.order, other.order)
        out = [Fraction(0)] * (order + 1)
        for i in range(order + 1):
            if not self.coeffs[i]:
                continue
            for j in range(order + 1 - i):
                out[i + j] = out[i + j] + self.coeffs[i] * other.coeffs[j]
        return PSeries(out, order)

    __rmul__ = __mul__

    def divide_by_t(self) -> "PSeries":
        """Exact division by t; the constant term must vanish."""
        if self.coeffs[0] != 0:
            raise DomainError("series has a nonzero constant term; not divisible by t")
        if self.order == 0:
            raise DomainError("division by t needs order >= 1")
        return PSeries(self.coeffs[1:], self.order - 1)

    def __eq__(self, other):
        return isinstance(other, PSeries) and self.order == other.order and self.coeffs == other.coeffs

    def __repr__(self):
        return f"PSeries({self.coeffs}, order={self.order})"


def exp_series(c, order: int) -> PSeries:
    """exp(c t) truncated at t^order."""
    return PSeries([Fraction(c) ** m / factorial(m) for m in range(order + 1)], order)


def edge_factor_series(c, order: int) -> PSeries:
    """(1 - exp(c t)) / t truncated at t^order, built by series division."""
    one = PSeries([Fraction(1)], order + 1)
    return (one - exp_series(c, order + 1)).divide_by_t()


def binomial_reexpansion(m: int) -> Dict[Tuple[int, int], int]:
    """(psi + psi')^m as {(i, m - i): C(m, i)}."""
    return {(i, m - i): comb(m, i) for i in range(m + 1)}
