from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drengine.errors import DesignError, DomainError, NotPolynomialError, NotYetPolynomialError
from drengine.exact import (
    MultiPoly,
    PSeries,
    binomial_reexpansion,
    edge_factor_series,
    exp_series,
    fit_poly_on_lattice,
    lagrange_interpolate,
    parse_poly,
    solve_exact,
    stable_interpolation,
    sum_range_closed_form,
)
from drengine.exact.interpolate import admissible_nodes, fit_many_on_lattice, simplex_design

x, y = MultiPoly.var("x"), MultiPoly.var("y")


# polynomials -------------------------------------------------------------


def test_basic_arithmetic():
    assert (x + 1) * (x - 1) == x**2 - 1
    assert (x**2 - 1).evaluate({"x": 7}) == 48
    assert (x**2).substitute({"x": y + 1}) == y**2 + 2 * y + 1


def test_substitute_missing_variable_is_domain_error():
    with pytest.raises(DomainError):
        (x * y).substitute({"x": 2})
    with pytest.raises(DomainError):
        (x * y).evaluate({"x": 2})
    assert (x * y).substitute({"x": 2}, partial=True) == 2 * y


def test_no_zero_coefficients_stored():
    p = x + y - x
    assert p == y
    assert len(p) == 1
    assert not (x - x)
    assert (x - x).degree() == -1


def test_graded_lex_order_and_json_round_trip():
    p = parse_poly("3*x^2*y - y^3 + 5 - x")
    doc = p.to_json(["x", "y"])
    assert doc["vars"] == ["x", "y"]
    assert [t["exp"] for t in doc["terms"]] == [[2, 1], [0, 3], [1, 0], [0, 0]]
    assert MultiPoly.from_json(doc) == p
    big = MultiPoly.const(Fraction(10**40 + 1, 3))
    assert MultiPoly.from_json(big.to_json()) == big


def test_parser():
    assert parse_poly("x_3*x_4") == MultiPoly.var("x_3") * MultiPoly.var("x_4")
    assert parse_poly("(x + 1)^2 - 2*x") == x**2 + 1
    assert parse_poly("-x_1") == -MultiPoly.var("x_1")
    with pytest.raises(DomainError):
        parse_poly("x +")
    with pytest.raises(DomainError):
        parse_poly("x ^ y")


small = st.integers(-5, 5)
monos = st.dictionaries(st.sampled_from(["x", "y", "z"]), st.integers(0, 3), max_size=3)
polys = st.lists(st.tuples(monos, small), max_size=5).map(
    lambda ts: sum((MultiPoly.monomial(m, c) for m, c in ts), MultiPoly())
)


@settings(max_examples=60, deadline=None)
@given(polys, polys, polys)
def test_ring_axioms(p, q, r):
    assert (p + q) + r == p + (q + r)
    assert (p * q) * r == p * (q * r)
    assert p * (q + r) == p * q + p * r
    assert p + q == q + p
    assert p * q == q * p


@settings(max_examples=40, deadline=None)
@given(polys, st.dictionaries(st.sampled_from(["x", "y", "z"]), small, min_size=3, max_size=3))
def test_substitution_is_evaluation(p, point):
    assert p.substitute(point).constant_term() == p.evaluate(point)


# interpolation ------------------------------------------------------------


def test_lagrange_examples():
    assert lagrange_interpolate([(1, 1), (2, 4), (3, 9)]) == x**2
    f = lambda r: Fraction(r * r - 1, 6)
    r = MultiPoly.var("r")
    assert lagrange_interpolate([(n, f(n)) for n in (5, 6, 7)], "r") == (r**2 - 1) * Fraction(1, 6)
    assert lagrange_interpolate([(3, Fraction(5, 7))]) == MultiPoly.const(Fraction(5, 7))


def test_lagrange_errors():
    with pytest.raises(DomainError):
        lagrange_interpolate([(1, 1), (1, 2)])
    with pytest.raises(DomainError):
        lagrange_interpolate([])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-9, 9), min_size=1, max_size=6), st.integers(-20, 20))
def test_lagrange_round_trip(coeffs, shift):
    p = sum((c * x**i for i, c in enumerate(coeffs)), MultiPoly())
    nodes = [shift + 3 * i for i in range(len(coeffs))]
    assert lagrange_interpolate([(t, p.evaluate({"x": t})) for t in nodes]) == p


def test_stable_interpolation_examples():
    poly, cert = stable_interpolation(lambda r: Fraction(r * r - 1, 6), 2)
    assert poly.constant_term() == Fraction(-1, 6)
    assert cert["excluded_moduli"] == [2, 3]
    poly, _ = stable_interpolation(lambda r: 1, 0)
    assert poly == MultiPoly.const(1)
    with pytest.raises(NotYetPolynomialError) as info:
        stable_interpolation(lambda r: r % 2, 3)
    assert info.value.best is not None


def test_stable_interpolation_eventual_only():
    # erratic up to 30, quadratic above
    f = lambda r: (r * r if r > 30 else r % 3)
    poly, cert = stable_interpolation(f, 2, start=0)
    assert poly == MultiPoly.var("r") ** 2
    assert cert["window"][0] > 30


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(-9, 9), min_size=1, max_size=5), st.integers(0, 40))
def test_stable_interpolation_predicts_fresh_nodes(coeffs, start):
    f = lambda r: sum(Fraction(c, i + 2) * r**i for i, c in enumerate(coeffs))
    poly, cert = stable_interpolation(f, 1, start=start)
    last = cert["validation"][-1]
    for r in range(last + 1, last + 11):
        assert poly.evaluate({"r": r}) == f(r)


def test_admissible_nodes_filters():
    assert admissible_nodes(10, 3, primes_only=True) == [11, 13, 17]
    assert admissible_nodes(0, 4, coprimality_modulus=6) == [1, 5, 7, 11]


def test_fit_on_lattice_examples():
    basis = [[1, -1]]
    poly, cert = fit_poly_on_lattice(lambda A: A[0] ** 2, basis, 2, variables=["a"])
    assert poly == MultiPoly.var("a") ** 2
    assert len(cert["holdout"]) == 5
    poly, _ = fit_poly_on_lattice(lambda A: 1, basis, 2)
    assert poly == MultiPoly.const(1)


def test_fit_holdout_mismatch_and_design_errors():
    with pytest.raises(NotPolynomialError):
        fit_poly_on_lattice(lambda A: A[0] ** 3, [[1, -1]], 2)
    with pytest.raises(DesignError):
        fit_poly_on_lattice(lambda A: 1, [[1, -1]], 2, design=[[0], [1]])
    with pytest.raises(DesignError):
        fit_poly_on_lattice(lambda A: 1, [[1, -1]], 1, design=[[0], [1]], holdout=[[1]])


def test_fit_two_dimensional_design():
    f = lambda A: A[0] ** 2 * A[1] - 3 * A[1] + Fraction(1, 2)
    basis = [[1, 0, 0], [0, 1, 0]]
    poly, _ = fit_poly_on_lattice(f, basis, 3, design=simplex_design(2, 3))
    assert poly == MultiPoly.var("t_1") ** 2 * MultiPoly.var("t_2") - 3 * MultiPoly.var("t_2") + Fraction(1, 2)


def test_fit_many_with_origin():
    fitted, _ = fit_many_on_lattice(
        lambda A: {"s": sum(A), "p": A[0] * A[1]}, [[1, -1]], 2, origin=[0, 4], variables=["a"]
    )
    a = MultiPoly.var("a")
    assert fitted["s"] == MultiPoly.const(4)
    assert fitted["p"] == a * (4 - a)


def test_solve_exact_overdetermined():
    sol = solve_exact([[1, 1], [1, -1], [2, 0]], [[3, 1, 4]])
    assert sol == [[2, 1]]
    with pytest.raises(NotPolynomialError):
        solve_exact([[1, 1], [1, -1], [2, 0]], [[3, 1, 5]])
    with pytest.raises(DesignError):
        solve_exact([[1, 1], [2, 2]], [[1, 2]])


# summation and series --------------------------------------------------------


def test_sum_range_examples():
    j, a = MultiPoly.var("j"), MultiPoly.var("a")
    assert sum_range_closed_form(j) == a * (a + 1) * Fraction(1, 2)
    assert sum_range_closed_form(MultiPoly.const(1)) == a
    F = sum_range_closed_form(j**2)
    assert F == a * (a + 1) * (2 * a + 1) * Fraction(1, 6)
    for n in range(21):
        assert F.evaluate({"a": n}) == sum(i * i for i in range(1, n + 1))


def test_sum_range_with_parameters():
    j, a, b = MultiPoly.var("j"), MultiPoly.var("a"), MultiPoly.var("b")
    P = (a - j) ** 2 * b + j
    F = sum_range_closed_form(P)
    for n in range(8):
        assert F.evaluate({"a": n, "b": 3}) == sum((n - i) ** 2 * 3 + i for i in range(1, n + 1))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-6, 6), min_size=1, max_size=6))
def test_sum_range_difference_identity(coeffs):
    j, a = MultiPoly.var("j"), MultiPoly.var("a")
    P = sum((c * j**i for i, c in enumerate(coeffs)), MultiPoly())
    F = sum_range_closed_form(P)
    assert F.evaluate({"a": 0}) == 0
    assert F - F.substitute({"a": a - 1}, partial=True) == P.substitute({"j": a}, partial=True)


def test_edge_factor_examples():
    c = Fraction(3, 2)
    s = edge_factor_series(c, 4)
    assert s[0] == -c
    assert s[1] == -c * c / 2
    for m in range(5):
        from math import factorial

        assert s[m] == -(c ** (m + 1)) / factorial(m + 1)
    assert binomial_reexpansion(2) == {(0, 2): 1, (1, 1): 2, (2, 0): 1}


@settings(max_examples=40, deadline=None)
@given(st.integers(-50, 50), st.integers(0, 6))
def test_edge_factor_well_defined(c, order):
    # numerator has no constant term, so no t^-1 term survives
    num = PSeries([1], order + 1) - exp_series(c, order + 1)
    assert num[0] == 0
    assert len(num.divide_by_t().coeffs) == order + 1


def test_series_division_guard():
    with pytest.raises(DomainError):
        PSeries([1, 2], 3).divide_by_t()


def test_series_product_truncates():
    s = exp_series(1, 3) * exp_series(2, 3)
    assert s == exp_series(3, 3)
