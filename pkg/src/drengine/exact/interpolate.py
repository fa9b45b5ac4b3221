"""Exact interpolation: univariate Lagrange, eventually-polynomial
sequences, and polynomial fits on integer lattices."""

from __future__ import annotations

import itertools
import random
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from math import gcd, isqrt
from typing import Callable, Dict, Hashable, List, Mapping, Optional, Sequence, Tuple

from ..errors import DesignError, DomainError, NotPolynomialError, NotYetPolynomialError
from .linalg import solve_exact
from .poly import MultiPoly


def _newton(nodes: Sequence[int], values: Sequence[Fraction]) -> List[Fraction]:
    """Dense coefficients (constant first) of the interpolating polynomial."""
    n = len(nodes)
    dd = [Fraction(v) for v in values]
    for level in range(1, n):
        for i in range(n - 1, level - 1, -1):
            dd[i] = (dd[i] - dd[i - 1]) / (nodes[i] - nodes[i - level])
    coeffs = [Fraction(0)] * n
    coeffs[0] = dd[n - 1]
    # Horner expansion of the Newton form
    for i in range(n - 2, -1, -1):
        shifted = [Fraction(0)] * n
        for j in range(n - 1):
            shifted[j + 1] = coeffs[j]
        for j in range(n):
            shifted[j] -= nodes[i] * coeffs[j]
        shifted[0] += dd[i]
        coeffs = shifted
    return coeffs


def _dense_to_poly(coeffs: Sequence[Fraction], var: str) -> MultiPoly:
    return MultiPoly({((var, i),) if i else (): c for i, c in enumerate(coeffs) if c})


def _dense_eval(coeffs: Sequence[Fraction], x) -> Fraction:
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def lagrange_interpolate(points: Sequence[Tuple[int, Fraction]], var: str = "x") -> MultiPoly:
    """Unique polynomial of degree < len(points) through ``points``."""
    if not points:
        raise DomainError("interpolation needs at least one point")
    nodes = [int(x) for x, _ in points]
    if len(set(nodes)) != len(nodes):
        raise DomainError("interpolation nodes must be pairwise distinct")
    return _dense_to_poly(_newton(nodes, [Fraction(v) for _, v in points]), var)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    for p in range(3, isqrt(n) + 1, 2):
        if n % p == 0:
            return False
    return True


def admissible_nodes(start: int, count: int, coprimality_modulus: int = 0, primes_only: bool = False) -> List[int]:
    """The first ``count`` integers > ``start`` passing the node filters."""
    out = []
    r = max(start, 0) + 1
    while len(out) < count:
        if (not coprimality_modulus or gcd(r, coprimality_modulus) == 1) and (not primes_only or is_prime(r)):
            out.append(r)
        r += 1
    return out


def prime_factors(n: int) -> List[int]:
    n = abs(n)
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def stable_interpolation(
    sampler: Callable[[int], Fraction],
    degree_hint: int,
    validation_count: int = 5,
    start: int = 0,
    coprimality_modulus: int = 0,
    *,
    primes_only: bool = False,
    max_degree: Optional[int] = None,
    max_doublings: int = 5,
    var: str = "r",
    threads: int = 1,
) -> Tuple[MultiPoly, dict]:
    """Certify that ``sampler`` agrees with a polynomial for large nodes.

    For each window start ``R`` (doubling on failure) and each degree
    ``d`` from ``degree_hint`` up to ``max_degree``, interpolate on the
    first ``d + 1`` admissible nodes above ``R`` and demand exact
    agreement on the next ``validation_count`` nodes.

    Returns the polynomial and a certificate naming the window, the
    validation nodes and the primes dividing coefficient denominators.
    """
    degree_hint = max(int(degree_hint), 0)
    if max_degree is None:
        max_degree = degree_hint + 4
    cache: Dict[int, Fraction] = {}

    def value(r):
        if r not in cache:
            cache[r] = Fraction(sampler(r))
        return cache[r]

    best = None
    R = max(int(start), 0)
    tried = []
    for attempt in range(max_doublings + 1):
        nodes = admissible_nodes(R, max_degree + 1 + validation_count, coprimality_modulus, primes_only)
        if threads > 1:
            first = [r for r in nodes[: degree_hint + 1 + validation_count] if r not in cache]
            with ThreadPoolExecutor(max_workers=threads) as pool:
                for r, v in zip(first, pool.map(sampler, first)):
                    cache[r] = Fraction(v)
        for d in range(degree_hint, max_degree + 1):
            window = nodes[: d + 1]
            check = nodes[d + 1 : d + 1 + validation_count]
            coeffs = _newton(window, [value(r) for r in window])
            best = _dense_to_poly(coeffs, var)
            if all(_dense_eval(coeffs, r) == value(r) for r in check):
                dens = set()
                for c in coeffs:
                    dens.update(prime_factors(c.denominator))
                cert = {
                    "start": R,
                    "degree": d,
                    "window": list(window),
                    "validation": list(check),
                    "excluded_moduli": sorted(dens),
                }
                return best, cert
        tried.append(R)
        R = 2 * R if R > 0 else 8
    raise NotYetPolynomialError(
        f"no polynomial of degree <= {max_degree} certified for window starts {tried}",
        best=best,
        certificate={"starts": tried, "max_degree": max_degree},
    )


def lattice_monomials(rank: int, degree: int) -> List[Tuple[int, ...]]:
    """Exponent vectors of total degree <= ``degree``, graded order."""
    out = []
    for d in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(rank), d):
            vec = [0] * rank
            for i in combo:
                vec[i] += 1
            out.append(tuple(vec))
    return out


def simplex_design(rank: int, degree: int, offset: Optional[Sequence[int]] = None) -> List[Tuple[int, ...]]:
    """Principal-lattice design ``{t >= 0 : sum(t) <= degree}``, shifted.

    It is unisolvent for polynomials of total degree <= ``degree``.
    """
    if offset is None:
        offset = [-(degree // 2)] * rank
    return [tuple(e + o for e, o in zip(vec, offset)) for vec in lattice_monomials(rank, degree)]


def default_holdout(rank: int, count: int, exclude, radius: int, seed: int = 0) -> List[Tuple[int, ...]]:
    rng = random.Random(seed)
    exclude = set(exclude)
    out: List[Tuple[int, ...]] = []
    attempts = 0
    while len(out) < count:
        pt = tuple(rng.randint(-radius, radius) for _ in range(rank))
        attempts += 1
        if pt not in exclude and pt not in out:
            out.append(pt)
        elif attempts > 1000 * (count + 1):
            radius += 1
    return out


def _lattice_point(coords, basis, origin):
    n = len(origin)
    return tuple(origin[i] + sum(c * b[i] for c, b in zip(coords, basis)) for i in range(n))


def fit_many_on_lattice(
    sampler: Callable[[Tuple[int, ...]], Mapping[Hashable, Fraction]],
    basis: Sequence[Sequence[int]],
    degree_bound: int,
    design: Optional[Sequence[Sequence[int]]] = None,
    holdout: Optional[Sequence[Sequence[int]]] = None,
    holdout_count: int = 5,
    *,
    origin: Optional[Sequence[int]] = None,
    variables: Optional[Sequence[str]] = None,
    threads: int = 1,
) -> Tuple[Dict[Hashable, MultiPoly], dict]:
    """Fit every component of a dict-valued sampler at once.

    ``sampler`` receives ambient points ``origin + sum t_i basis_i``; the
    fitted polynomials are in the lattice coordinates ``t_i`` (named by
    ``variables``, default ``t_1..t_m``). Keys missing from a sample are
    read as zero.
    """
    rank = len(basis)
    if origin is None:
        origin = [0] * (len(basis[0]) if basis else 0)
    if variables is None:
        variables = [f"t_{i + 1}" for i in range(rank)]
    monos = lattice_monomials(rank, degree_bound)
    if design is None:
        design = simplex_design(rank, degree_bound)
    design = [tuple(map(int, p)) for p in design]
    if len(set(design)) < len(monos):
        raise DesignError(f"design has {len(set(design))} points, {len(monos)} monomials need fitting")
    if holdout is None:
        holdout = default_holdout(rank, holdout_count, design, radius=degree_bound + 3)
    holdout = [tuple(map(int, p)) for p in holdout]
    if set(holdout) & set(design):
        raise DesignError("holdout points must be disjoint from the design")

    points = design + holdout
    ambient = [_lattice_point(p, basis, origin) for p in points]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            samples = list(pool.map(sampler, ambient))
    else:
        samples = [sampler(a) for a in ambient]
    keys = sorted({k for s in samples for k in s}, key=repr)
    matrix = [[_mono_value(p, m) for m in monos] for p in design]
    rhs = [[Fraction(samples[i].get(k, 0)) for i in range(len(design))] for k in keys]
    solutions = solve_exact(matrix, rhs) if keys else []
    fitted: Dict[Hashable, MultiPoly] = {}
    mismatches = []
    for k, sol in zip(keys, solutions):
        poly = MultiPoly(
            {tuple((variables[i], e) for i, e in enumerate(m) if e): c for m, c in zip(monos, sol)}
        )
        for j, p in enumerate(holdout):
            pred = sum((c * _mono_value(p, m) for m, c in zip(monos, sol)), Fraction(0))
            actual = Fraction(samples[len(design) + j].get(k, 0))
            if pred != actual:
                mismatches.append((k, p, pred, actual))
        if poly:
            fitted[k] = poly
    if mismatches:
        raise NotPolynomialError(
            f"{len(mismatches)} holdout mismatches at degree {degree_bound}", best=fitted, mismatches=mismatches
        )
    cert = {
        "degree_bound": degree_bound,
        "design": [list(p) for p in design],
        "holdout": [list(p) for p in holdout],
        "variables": list(variables),
    }
    return fitted, cert


def _mono_value(point, mono) -> int:
    v = 1
    for x, e in zip(point, mono):
        if e:
            v *= x**e
    return v


def fit_poly_on_lattice(
    sampler: Callable[[Tuple[int, ...]], Fraction],
    basis: Sequence[Sequence[int]],
    degree_bound: int,
    design: Optional[Sequence[Sequence[int]]] = None,
    holdout_count: int = 5,
    *,
    holdout: Optional[Sequence[Sequence[int]]] = None,
    origin: Optional[Sequence[int]] = None,
    variables: Optional[Sequence[str]] = None,
) -> Tuple[MultiPoly, dict]:
    """Scalar version of :func:`fit_many_on_lattice`."""
    fitted, cert = fit_many_on_lattice(
        lambda a: {0: Fraction(sampler(a))},
        basis,
        degree_bound,
        design,
        holdout,
        holdout_count,
        origin=origin,
        variables=variables,
    )
    return fitted.get(0, MultiPoly()), cert
