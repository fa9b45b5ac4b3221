"""Exact linear solves by fraction-free (Bareiss) elimination."""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import List, Sequence

from ..errors import DesignError, NotPolynomialError


def solve_exact(matrix: Sequence[Sequence[int]], rhs: Sequence[Sequence[Fraction]]) -> List[List[Fraction]]:
    """Solve ``matrix @ X = rhs`` for X with integer ``matrix``.

    ``rhs`` is given column-wise: ``rhs[c][row]``. The system may be
    overdetermined; it must have full column rank and be consistent.
    Returns the solution column-wise.
    """
    nrows = len(matrix)
    ncols = len(matrix[0]) if nrows else 0
    if nrows < ncols:
        raise DesignError(f"{nrows} samples cannot determine {ncols} coefficients")
    scales = []
    cols = []
    for col in rhs:
        col = [Fraction(v) for v in col]
        s = lcm(*(v.denominator for v in col)) if col else 1
        scales.append(s)
        cols.append([int(v * s) for v in col])
    nr = len(cols)
    aug = [list(map(int, matrix[i])) + [cols[c][i] for c in range(nr)] for i in range(nrows)]
    width = ncols + nr
    prev = 1
    for k in range(ncols):
        pivot = next((i for i in range(k, nrows) if aug[i][k] != 0), None)
        if pivot is None:
            raise DesignError("sample design is singular")
        if pivot != k:
            aug[k], aug[pivot] = aug[pivot], aug[k]
        pk = aug[k][k]
        rowk = aug[k]
        for i in range(k + 1, nrows):
            row = aug[i]
            f = row[k]
            for j in range(k + 1, width):
                row[j] = (row[j] * pk - f * rowk[j]) // prev
            row[k] = 0
        # rows above the pivot are left alone; back substitution handles them
        prev = pk
    for i in range(ncols, nrows):
        if any(aug[i][ncols + c] for c in range(nr)):
            raise NotPolynomialError("overdetermined system is inconsistent")
    out = []
    for c in range(nr):
        x = [Fraction(0)] * ncols
        for i in range(ncols - 1, -1, -1):
            s = Fraction(aug[i][ncols + c])
            for j in range(i + 1, ncols):
                s -= aug[i][j] * x[j]
            x[i] = s / aug[i][i]
        out.append([v / scales[c] for v in x])
    return out
