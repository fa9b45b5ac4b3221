from __future__ import annotations

import json
import random
from fractions import Fraction
from math import factorial

import pytest

from drengine import pixton, selftest
from drengine.errors import DomainError
from drengine.exact import MultiPoly, stable_interpolation
from drengine.graphs import StableGraph, enumerate_stable_graphs
from drengine.pixton import (
    DecoratedStratum,
    P0_graph,
    P_graph,
    TautExpression,
    dr_cycle,
    dr_cycle_at_r,
    dr_cycle_interpolated,
    dr_polynomial,
    edge_coefficient,
    exp_prefactor,
    permute_legs,
    prefactor_terms,
    pullback_multiply,
    raw_P0,
    smooth_graph,
)
from drengine.selftest import random_A


# edge factor -----------------------------------------------------------------


def test_edge_coefficients():
    assert edge_coefficient(0) == Fraction(-1, 2)
    assert edge_coefficient(1) == Fraction(-1, 8)
    assert edge_coefficient(2) == Fraction(-1, 48)


# per-graph classes ------------------------------------------------------------


def test_loop_class(loop):
    for r in (2, 5, 9):
        P = P_graph(loop, [0], 0, r, 1)
        assert len(P) == 1
        s, c = P.terms()[0]
        assert s.codim == 1 and c == -Fraction(r * r - 1, 12)
    P0 = P0_graph(loop, [0], 0, 1)
    assert [c for _, c in P0.terms()] == [Fraction(1, 12)]


def test_bridge_class_vanishes(bridge):
    assert not P0_graph(bridge, [1, -1], 0, 1)
    assert not P0_graph(bridge, [0, 0], 0, 1)


def test_truncation_below_edge_count(banana):
    assert not P_graph(banana, [0, 0], 0, 5, 1)
    assert not P0_graph(banana, [0, 0], 0, 1)


def test_P_graph_interpolates_to_P0(loop, banana, loop_bridge):
    cases = [(loop, [0], 0, 2), (banana, [1, -1], 0, 3), (loop_bridge, [2, -2], 0, 3)]
    for G, A, k, mc in cases:
        P0 = P0_graph(G, A, k, mc)
        cache = {}

        def coeff(key):
            def sampler(r):
                if r not in cache:
                    cache[r] = P_graph(G, A, k, r, mc).coefficient_map()
                return cache[r].get(key, Fraction(0))

            return sampler

        keys = set(P0.keys()) | set(P_graph(G, A, k, 41, mc).keys())
        for key in keys:
            poly, _ = stable_interpolation(coeff(key), 2 * len(G.edges) + 2, start=30)
            assert poly.constant_term() == P0.coefficient_map().get(key, 0)


def test_P0_window_independent(banana, loop_bridge):
    for G, A in ((banana, [2, -2]), (loop_bridge, [1, -1])):
        assert raw_P0(G, A, 0, 3) == raw_P0(G, A, 0, 3, start=250)


# prefactor and pullback -------------------------------------------------------


def test_prefactor_coefficients():
    terms = dict(prefactor_terms(2, [3, -1], 2, 2))
    assert terms[(0, (0, 0))] == 1
    assert terms[(1, (0, 0))] == -2
    assert terms[(0, (1, 0))] == Fraction(9, 2)
    assert terms[(0, (0, 1))] == Fraction(1, 2)
    assert terms[(2, (0, 0))] == Fraction(4, 2)
    assert terms[(0, (2, 0))] == Fraction(81, 8)
    assert terms[(1, (1, 0))] == -9
    assert len(terms) == 1 + 3 + 6


def test_prefactor_symbolic():
    a, k = MultiPoly.var("a"), MultiPoly.var("k")
    terms = dict(prefactor_terms(1, [a], k, 1))
    assert terms[(1, (0,))] == k * k * Fraction(-1, 2)
    assert terms[(0, (1,))] == a * a * Fraction(1, 2)


def test_exp_prefactor_on_smooth_stratum():
    e = exp_prefactor(1, 1, [2], 2, 1)
    assert e.codims() == {0, 1}
    G = smooth_graph(1, 1)
    assert e.coefficient(DecoratedStratum.make(G)) == 1
    assert e.coefficient(DecoratedStratum.make(G, {1: 1})) == 2
    assert e.coefficient(DecoratedStratum.make(G, None, {0: 1})) == -2
    with pytest.raises(DomainError):
        exp_prefactor(1, 1, [2], 2, -1)


def test_pullback_rules(bridge):
    amb = DecoratedStratum.make(smooth_graph(1, 2), {1: 1}, {0: 2})
    inner = TautExpression(1, 2)
    inner.add_term(bridge, {3: 1}, None, Fraction(1, 3))
    out = pullback_multiply(bridge, amb, inner)
    v0, v1 = bridge.vertex_ids
    # psi_1 goes to leg 1; kappa_1^2 splits multinomially over vertices
    want = TautExpression(1, 2)
    want.add_term(bridge, {3: 1, 1: 1}, {v0: 2}, Fraction(1, 3))
    want.add_term(bridge, {3: 1, 1: 1}, {v0: 1, v1: 1}, Fraction(2, 3))
    want.add_term(bridge, {3: 1, 1: 1}, {v1: 2}, Fraction(1, 3))
    assert out == want


def test_pullback_rejects_non_smooth(bridge):
    with pytest.raises(DomainError):
        pullback_multiply(bridge, DecoratedStratum.make(bridge), TautExpression(1, 2))


# expressions ------------------------------------------------------------------


def test_expression_merges_isomorphic_terms(banana):
    e = TautExpression(1, 2)
    e.add_term(banana, {3: 1}, None, 1)
    e.add_term(banana, {5: 1}, None, 2)  # the other edge: isomorphic decoration
    assert len(e) == 1 and e.terms()[0][1] == 3
    e.add_term(banana, {4: 1}, None, 1)  # other vertex: a different class
    assert len(e) == 2
    e.add_term(banana, {6: 1}, None, -1)
    e.add_term(banana, {3: 1}, None, -3)
    assert not e


def test_stratum_validation(loop):
    with pytest.raises(DomainError):
        DecoratedStratum.make(loop, {17: 1})
    with pytest.raises(DomainError):
        DecoratedStratum.make(loop, None, {4: 1})


def test_expression_json_round_trip():
    e = dr_cycle(1, 2, [3, -1], 1)
    doc = json.loads(json.dumps(e.to_json()))
    assert TautExpression.from_json(doc) == e
    p = dr_polynomial(1, 1).expression
    assert TautExpression.from_json(json.loads(json.dumps(p.to_json()))) == p
    with pytest.raises(DomainError):
        TautExpression.from_json({"g": 1})


# the cycle ---------------------------------------------------------------------


def test_genus_zero_is_fundamental_class():
    rng = random.Random(20)
    for n in range(3, 7):
        A = random_A(rng, n, 0, spread=5)
        e = dr_cycle(0, n, A, 0)
        assert len(e) == 1
        s, c = e.terms()[0]
        assert not s.graph.edges and s.codim == 0 and c == 1


def test_genus_one_one_leg():
    e = dr_cycle(1, 1, [0], 0)
    loop1 = StableGraph.from_edges([0], [0], [(0, 0)])
    assert e.coefficient(DecoratedStratum.make(loop1)) == Fraction(1, 24)
    e2 = dr_cycle(1, 1, [3], 3)
    smooth = smooth_graph(1, 1)
    assert e2.coefficient(DecoratedStratum.make(smooth, {1: 1})) == Fraction(9, 2)
    assert e2.coefficient(DecoratedStratum.make(smooth, None, {0: 1})) == Fraction(-9, 2)


def test_codimension_is_genus():
    for g, n, A, k in [(1, 1, [2], 2), (1, 2, [3, -3], 0), (1, 3, [1, 1, 1], 1), (2, 1, [6], 2)]:
        e = dr_cycle(g, n, A, k)
        assert e.codims() == {g}


def test_trivial_A_supported_on_boundary():
    e = dr_cycle(1, 2, [0, 0], 0)
    assert e and all(len(s.graph.edges) == 1 and not s.psi and not s.kappa for s, _ in e.terms())


def test_dr_cycle_rejects_bad_A():
    with pytest.raises(DomainError):
        dr_cycle(1, 2, [1, 1], 0)


def test_equivariance():
    rng = random.Random(21)
    for _ in range(4):
        k = rng.randint(-2, 2)
        A = random_A(rng, 3, 3 * k)
        sigma = list(range(3))
        rng.shuffle(sigma)
        lhs = dr_cycle(1, 3, [A[s] for s in sigma], k)
        assert lhs == permute_legs(dr_cycle(1, 3, A, k), sigma)
    with pytest.raises(DomainError):
        permute_legs(dr_cycle(1, 2, [1, -1], 0), [0, 0])


def test_threads_identical():
    a = dr_cycle(2, 1, [3], 1)
    b = dr_cycle(2, 1, [3], 1, threads=8)
    assert json.dumps(a.to_json(), sort_keys=True) == json.dumps(b.to_json(), sort_keys=True)


def test_fixed_modulus_interpolates_to_cycle():
    for g, n, A, k in [(1, 1, [1], 1), (1, 2, [2, -2], 0)]:
        lhs = dr_cycle(g, n, A, k)
        rhs = dr_cycle_interpolated(g, n, A, k, [53, 59, 61, 67, 71, 73])
        assert lhs == rhs
        assert dr_cycle_at_r(g, n, A, k, 53) != lhs


# polynomial families ---------------------------------------------------------


def test_polynomial_family_1_2():
    fit = dr_polynomial(1, 2)
    rec = dr_polynomial(1, 2, method="recursion")
    assert fit.expression == rec.expression
    assert fit.max_degree() <= 2
    assert fit.variables == ("a_1", "k")
    rng = random.Random(22)
    for _ in range(6):
        a1, k = rng.randint(-12, 12), rng.randint(-5, 5)
        A = [a1, 2 * k - a1]
        assert fit.at(A) == dr_cycle(1, 2, A, k)


def test_polynomial_fixed_k():
    p = dr_polynomial(1, 2, k=1)
    assert p.variables == ("a_1",)
    assert p.at([5, -3]) == dr_cycle(1, 2, [5, -3], 1)
    with pytest.raises(DomainError):
        p.at([1, -1])
    with pytest.raises(DomainError):
        p.at([1, 0])


def test_polynomial_ambient_representative():
    p = dr_polynomial(1, 2)
    amb = p.ambient()
    for A in ([3, 1], [-4, 0], [7, -7]):
        assert amb.evaluate({"a_1": A[0], "a_2": A[1]}) == dr_cycle(1, 2, A, sum(A) // 2)
    doc = p.to_json()
    assert doc["lattice"]["variables"] == ["a_1", "k"]
    assert doc["ambient_representative"]["variables"] == ["a_1", "a_2"]


def test_polynomial_errors():
    with pytest.raises(DomainError):
        dr_polynomial(1, 0)
    with pytest.raises(DomainError):
        dr_polynomial(0, 2)
    with pytest.raises(DomainError):
        dr_polynomial(1, 2, method="guess")


# mutation sensitivity --------------------------------------------------------


def test_mutated_edge_factor_is_detected(monkeypatch):
    original = pixton.edge_coefficient

    def mutated(m):
        return original(m) * (Fraction(3, 2) if m == 0 else 1)

    assert selftest.criterion_9().ok
    monkeypatch.setattr(pixton, "edge_coefficient", mutated)
    assert not selftest.criterion_9().ok
