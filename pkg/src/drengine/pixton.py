"""Pixton's formula as a formal sum of decorated boundary strata.

A decorated stratum is a stable graph with psi exponents on half-edges
(legs and edge halves) and kappa_1 exponents on vertices. Coefficients
are exact rationals, or polynomials in the ramification data for the
families returned by :func:`dr_polynomial`.
"""

from __future__ import annotations

import itertools
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .errors import DomainError, NotPolynomialError
from .exact import (
    MultiPoly,
    binomial_reexpansion,
    edge_factor_series,
    fit_many_on_lattice,
    lagrange_interpolate,
    simplex_design,
)
from .exact.interpolate import admissible_nodes
from .exact.poly import rational_from_json, rational_to_json
from .graphs import StableGraph, automorphism_count, canonical_graph, enumerate_stable_graphs
from .weightsum import (
    RamVector,
    avar,
    constant_terms,
    enumerate_weightings,
    twisted_S_polynomial,
    xvar,
)

Decoration = Tuple[Tuple[int, int], ...]


def _clean(d: Optional[Mapping[int, int]]) -> Decoration:
    return tuple(sorted((int(k), int(v)) for k, v in (d or {}).items() if v))


# strata and expressions -------------------------------------------------


@dataclass(frozen=True)
class DecoratedStratum:
    graph: StableGraph
    psi: Decoration = ()
    kappa: Decoration = ()

    def __post_init__(self):
        hs = set(self.graph.half_edges)
        vs = set(self.graph.vertex_ids)
        if any(h not in hs or e < 0 for h, e in self.psi):
            raise DomainError("psi decoration on a half-edge outside the graph")
        if any(v not in vs or e < 0 for v, e in self.kappa):
            raise DomainError("kappa decoration on a vertex outside the graph")

    @classmethod
    def make(cls, graph, psi=None, kappa=None) -> "DecoratedStratum":
        return cls(graph, _clean(psi), _clean(kappa))

    @property
    def codim(self) -> int:
        return len(self.graph.edges) + sum(e for _, e in self.psi) + sum(e for _, e in self.kappa)

    def canonical(self) -> Tuple[bytes, "DecoratedStratum"]:
        g, psi, kappa, form = canonical_graph(self.graph, dict(self.psi), dict(self.kappa))
        return form.encoding, DecoratedStratum(g, _clean(psi), _clean(kappa))

    def to_json(self) -> dict:
        return {
            "graph": self.graph.to_json(),
            "psi": {str(h): e for h, e in self.psi},
            "kappa1": {str(v): e for v, e in self.kappa},
        }


def _coeff_json(c):
    if isinstance(c, MultiPoly):
        return c.to_json()
    return rational_to_json(Fraction(c))


def _coeff_from_json(doc):
    if "terms" in doc:
        return MultiPoly.from_json(doc)
    return rational_from_json(doc)


class TautExpression:
    """Formal linear combination of decorated strata, merged up to isomorphism."""

    def __init__(self, g: int, n: int):
        self.g = g
        self.n = n
        self._terms: Dict[bytes, Tuple[DecoratedStratum, object]] = {}

    def add(self, stratum: DecoratedStratum, coeff) -> None:
        if not coeff:
            return
        key, canon = stratum.canonical()
        if key in self._terms:
            old = self._terms[key][1]
            new = old + coeff
            if new:
                self._terms[key] = (self._terms[key][0], new)
            else:
                del self._terms[key]
        else:
            self._terms[key] = (canon, coeff)

    def add_term(self, graph, psi=None, kappa=None, coeff=1) -> None:
        self.add(DecoratedStratum.make(graph, psi, kappa), coeff)

    def merge(self, other: "TautExpression", scale=1) -> None:
        for s, c in other.terms():
            self.add(s, c * scale)

    def terms(self) -> List[Tuple[DecoratedStratum, object]]:
        return [self._terms[k] for k in sorted(self._terms)]

    def keys(self) -> List[bytes]:
        return sorted(self._terms)

    def coefficient_map(self) -> Dict[bytes, object]:
        return {k: c for k, (_, c) in self._terms.items()}

    def coefficient(self, stratum: DecoratedStratum):
        key, _ = stratum.canonical()
        return self._terms.get(key, (None, Fraction(0)))[1]

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def __eq__(self, other):
        if not isinstance(other, TautExpression):
            return NotImplemented
        return (self.g, self.n) == (other.g, other.n) and self.coefficient_map() == other.coefficient_map()

    def codims(self) -> set:
        return {s.codim for s, _ in self._terms.values()}

    def map_coefficients(self, f: Callable) -> "TautExpression":
        out = TautExpression(self.g, self.n)
        for key, (s, c) in self._terms.items():
            v = f(c)
            if v:
                out._terms[key] = (s, v)
        return out

    def evaluate(self, point: Mapping[str, object]) -> "TautExpression":
        """Evaluate polynomial coefficients at a point."""
        return self.map_coefficients(lambda c: c.evaluate(point) if isinstance(c, MultiPoly) else c)

    def to_json(self) -> dict:
        return {
            "g": self.g,
            "n": self.n,
            "terms": [dict(s.to_json(), coeff=_coeff_json(c)) for s, c in self.terms()],
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "TautExpression":
        try:
            out = cls(int(doc["g"]), int(doc["n"]))
            for t in doc["terms"]:
                graph = StableGraph.from_json(t["graph"])
                psi = {int(h): int(e) for h, e in t.get("psi", {}).items()}
                kappa = {int(v): int(e) for v, e in t.get("kappa1", {}).items()}
                out.add_term(graph, psi, kappa, _coeff_from_json(t["coeff"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"malformed expression JSON: {exc}") from exc
        return out

    def __repr__(self):
        rows = [f"  {c} * {s.to_json()['psi']} {s.to_json()['kappa1']} E={len(s.graph.edges)}" for s, c in self.terms()]
        return f"TautExpression(g={self.g}, n={self.n},\n" + "\n".join(rows) + ")"


# per-graph classes ------------------------------------------------------

# raw terms: psi decoration on the graph's own half-edges -> coefficient
RawTerms = Dict[Decoration, object]


def edge_coefficient(m: int) -> Fraction:
    """Coefficient of (w w')^{m+1} t^m in the edge factor at c = w w' / 2."""
    return Fraction(-1, 2 ** (m + 1) * factorial(m + 1))


def _edge_budgets(n_edges: int, budget: int) -> List[Tuple[int, ...]]:
    """Multi-indices ``m`` with ``sum(m) <= budget``."""
    if budget < 0:
        return []
    return [m for m in itertools.product(range(budget + 1), repeat=n_edges) if sum(m) <= budget]


def _expand_psi(graph: StableGraph, ms: Sequence[int]) -> List[Tuple[Decoration, int]]:
    """(psi_h + psi_h')^{m_e} over all edges, as decorations with multiplicity."""
    parts = [binomial_reexpansion(m) for m in ms]
    out = []
    for choice in itertools.product(*(p.items() for p in parts)):
        deco = {}
        mult = 1
        for (h, hp), ((i, j), c) in zip(graph.edges, choice):
            if i:
                deco[h] = i
            if j:
                deco[hp] = j
            mult *= c
        out.append((_clean(deco), mult))
    return out


def _edge_monomial(graph: StableGraph, ms: Sequence[int]):
    return tuple(sorted(p for (h, hp), m in zip(graph.edges, ms) for p in ((h, m + 1), (hp, m + 1))))


def raw_P0(
    graph: StableGraph,
    A: Sequence[int],
    k: int,
    max_codim: int,
    *,
    threads: int = 1,
    start: Optional[int] = None,
) -> RawTerms:
    """Constant-term version of P_r, monomial by monomial."""
    nE = len(graph.edges)
    ms_list = _edge_budgets(nE, max_codim - nE)
    if not ms_list:
        return {}
    monos = [_edge_monomial(graph, ms) for ms in ms_list]
    values = constant_terms(graph, A, k, monos, start=start, threads=threads)
    out: RawTerms = {}
    for ms, (val, _) in zip(ms_list, values):
        if not val:
            continue
        const = Fraction(1)
        for m in ms:
            const *= edge_coefficient(m)
        for deco, mult in _expand_psi(graph, ms):
            out[deco] = out.get(deco, 0) + const * mult * val
    return {d: c for d, c in out.items() if c}


def raw_P_literal(graph: StableGraph, A: Sequence[int], k: int, r: int, max_codim: int) -> RawTerms:
    """P_r by expanding the edge-factor series for each weighting."""
    nE = len(graph.edges)
    budget = max_codim - nE
    if budget < 0:
        return {}
    ms_list = _edge_budgets(nE, budget)
    acc: Dict[Tuple[int, ...], Fraction] = {ms: Fraction(0) for ms in ms_list}
    counts: Counter = Counter()
    for w in enumerate_weightings(graph, A, r, k):
        vals = w.as_dict()
        counts[tuple(Fraction(vals[h] * vals[hp], 2) for h, hp in graph.edges)] += 1
    series_cache: Dict[Fraction, list] = {}
    for cs, mult in counts.items():
        per_edge = []
        for c in cs:
            if c not in series_cache:
                series_cache[c] = edge_factor_series(c, budget).coeffs
            per_edge.append(series_cache[c])
        for ms in ms_list:
            prod = Fraction(mult)
            for coeffs, m in zip(per_edge, ms):
                prod *= coeffs[m]
            acc[ms] += prod
    norm = Fraction(1, r**graph.h1)
    out: RawTerms = {}
    for ms, total in acc.items():
        if not total:
            continue
        for deco, mult in _expand_psi(graph, ms):
            out[deco] = out.get(deco, 0) + total * mult * norm
    return {d: c for d, c in out.items() if c}


def _raw_to_expr(graph: StableGraph, raw: RawTerms, g: int) -> TautExpression:
    expr = TautExpression(g, graph.n_legs)
    for deco, c in raw.items():
        expr.add(DecoratedStratum(graph, deco, ()), c)
    return expr


def P_graph(graph: StableGraph, A: Sequence[int], k: int, r: int, max_codim: int) -> TautExpression:
    """P_r of the graph, truncated at ``max_codim`` (edges included)."""
    ram = RamVector.for_graph(graph, A, k)
    return _raw_to_expr(graph, raw_P_literal(graph, A, k, r, max_codim), ram.g)


def P0_graph(
    graph: StableGraph, A: Sequence[int], k: int, max_codim: int, *, start: Optional[int] = None, threads: int = 1
) -> TautExpression:
    """P_0 of the graph: every weighting sum replaced by its constant term."""
    ram = RamVector.for_graph(graph, A, k)
    return _raw_to_expr(graph, raw_P0(graph, A, k, max_codim, start=start, threads=threads), ram.g)


# prefactor and pullback -----------------------------------------------------


def prefactor_terms(n: int, A: Sequence, k, max_codim: int) -> List[Tuple[Tuple[int, Tuple[int, ...]], object]]:
    """Terms ``((p, q), coeff)`` of exp(-k^2 kappa_1 / 2 + sum a_i^2 psi_i / 2).

    Entries of A and k may be numbers or polynomials.
    """
    out = []
    half = Fraction(1, 2)
    kk = k * k * (-half)
    sq = [a * a * half for a in A]
    for total in range(max_codim + 1):
        for p in range(total + 1):
            for qs in _compositions(total - p, n):
                c = kk**p * Fraction(1, factorial(p))
                for s, q in zip(sq, qs):
                    if q:
                        c = c * s**q * Fraction(1, factorial(q))
                out.append(((p, qs), c))
    return out


def _compositions(total: int, parts: int) -> Iterable[Tuple[int, ...]]:
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def smooth_graph(g: int, n: int) -> StableGraph:
    return StableGraph.from_edges([g], [0] * n, [])


def exp_prefactor(g: int, n: int, A: Sequence, k, max_codim: int) -> TautExpression:
    """The truncated prefactor on the smooth stratum."""
    if max_codim < 0:
        raise DomainError("max_codim must be >= 0")
    trivial = smooth_graph(g, n)
    expr = TautExpression(g, n)
    for (p, qs), c in prefactor_terms(n, A, k, max_codim):
        psi = {trivial.legs[i]: q for i, q in enumerate(qs)}
        expr.add_term(trivial, psi, {trivial.vertex_ids[0]: p}, c)
    return expr


def _pullback_terms(graph: StableGraph, p: int, qs: Sequence[int]) -> List[Tuple[Dict[int, int], Dict[int, int], int]]:
    """psi_i to leg i; kappa_1^p to (sum_v kappa_1(v))^p, multinomially."""
    if len(qs) > graph.n_legs:
        raise DomainError("ambient psi decoration on a leg the graph does not have")
    psi = {graph.legs[i]: q for i, q in enumerate(qs) if q}
    out = []
    vs = graph.vertex_ids
    for split in _compositions(p, len(vs)):
        mult = factorial(p)
        for s in split:
            mult //= factorial(s)
        out.append((psi, {v: s for v, s in zip(vs, split) if s}, mult))
    return out


def _combine(d1: Decoration, d2: Mapping[int, int]) -> Decoration:
    out = dict(d1)
    for h, e in d2.items():
        out[h] = out.get(h, 0) + e
    return _clean(out)


def pullback_multiply(graph: StableGraph, ambient: DecoratedStratum, inner: TautExpression) -> TautExpression:
    """Product of a pulled-back smooth-stratum monomial with classes on strata."""
    if ambient.graph.edges or len(ambient.graph.vertices) != 1:
        raise DomainError("ambient term must live on the smooth stratum")
    if ambient.graph.n_legs != graph.n_legs:
        raise DomainError("ambient term and graph have different leg counts")
    leg_pos = ambient.graph.leg_index
    qs = [0] * ambient.graph.n_legs
    for h, e in ambient.psi:
        if h not in leg_pos:
            raise DomainError(f"ambient psi on non-leg half-edge {h}")
        qs[leg_pos[h]] = e
    p = sum(e for _, e in ambient.kappa)
    out = TautExpression(inner.g, inner.n)
    for s, c in inner.terms():
        for psi, kappa, mult in _pullback_terms(s.graph, p, qs):
            out.add(DecoratedStratum(s.graph, _combine(s.psi, psi), _combine(s.kappa, kappa)), c * mult)
    return out


# the formula ----------------------------------------------------------------

Provider = Callable[[StableGraph], RawTerms]


def _graph_contribution(graph: StableGraph, g: int, raw: RawTerms, pref) -> List[Tuple[DecoratedStratum, object]]:
    aut = automorphism_count(graph)
    nE = len(graph.edges)
    out = []
    for deco, c in raw.items():
        inner_codim = nE + sum(e for _, e in deco)
        for (p, qs), pc in pref:
            if inner_codim + p + sum(qs) != g:
                continue
            for psi, kappa, mult in _pullback_terms(graph, p, qs):
                coeff = c * pc * Fraction(mult, aut)
                out.append((DecoratedStratum(graph, _combine(deco, psi), _clean(kappa)), coeff))
    return out


def _assemble(g: int, n: int, A_vals: Sequence, k_val, provider: Provider, threads: int = 1) -> TautExpression:
    graphs = [G for G in enumerate_stable_graphs(g, n) if len(G.edges) <= g]
    pref = prefactor_terms(n, A_vals, k_val, g)

    def work(G):
        return _graph_contribution(G, g, provider(G), pref)

    if threads > 1 and len(graphs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, graphs))
    else:
        parts = [work(G) for G in graphs]
    expr = TautExpression(g, n)
    for part in parts:
        for s, c in part:
            expr.add(s, c)
    return expr


def dr_cycle(g: int, n: int, A: Sequence[int], k: int, *, threads: int = 1) -> TautExpression:
    """DR_g(A) at twist k: the codimension-g part of Pixton's formula."""
    A = [int(a) for a in A]
    RamVector(tuple(A), k, g, n)
    return _assemble(g, n, A, k, lambda G: raw_P0(G, A, k, g), threads)


def dr_cycle_at_r(g: int, n: int, A: Sequence[int], k: int, r: int, *, threads: int = 1) -> TautExpression:
    """The same formula with P_r in place of P_0 (fixed modulus r)."""
    A = [int(a) for a in A]
    RamVector(tuple(A), k, g, n)
    return _assemble(g, n, A, k, lambda G: raw_P_literal(G, A, k, r, g), threads)


def dr_cycle_interpolated(
    g: int, n: int, A: Sequence[int], k: int, moduli: Sequence[int], *, threads: int = 1
) -> TautExpression:
    """Constant terms in r, per stratum, of the formula built at each modulus."""
    exprs = [(r, dr_cycle_at_r(g, n, A, k, r, threads=threads)) for r in moduli]
    keys = sorted({key for _, e in exprs for key in e.keys()})
    strata = {}
    for _, e in exprs:
        for key, (s, _) in e._terms.items():
            strata.setdefault(key, s)
    out = TautExpression(g, n)
    for key in keys:
        pts = [(r, e.coefficient_map().get(key, Fraction(0))) for r, e in exprs]
        ct = lagrange_interpolate(pts, "r").constant_term()
        if ct:
            out._terms[key] = (strata[key], ct)
    return out


# polynomial families ---------------------------------------------------------


@dataclass
class DRPolynomial:
    """DR_g as polynomials on the lattice ``{A : (2g-2+n) | sum(A)}``.

    Lattice coordinates are ``a_1..a_{n-1}`` and ``k`` with
    ``a_n = (2g-2+n) k - (a_1 + ... + a_{n-1})``; with ``k`` fixed they
    are ``a_1..a_{n-1}`` only.
    """

    g: int
    n: int
    k: Optional[int]
    method: str
    expression: TautExpression
    variables: Tuple[str, ...]
    certificate: dict

    def lattice_point(self, A: Sequence[int]) -> Dict[str, int]:
        d = 2 * self.g - 2 + self.n
        A = [int(a) for a in A]
        if len(A) != self.n:
            raise DomainError(f"A has {len(A)} entries, expected {self.n}")
        if sum(A) % d:
            raise DomainError(f"sum(A) = {sum(A)} is not divisible by {d}")
        k = sum(A) // d
        if self.k is not None and k != self.k:
            raise DomainError(f"A has twist {k}, family is for k = {self.k}")
        point = {avar(i + 1): A[i] for i in range(self.n - 1)}
        if self.k is None:
            point["k"] = k
        return point

    def at(self, A: Sequence[int]) -> TautExpression:
        return self.expression.evaluate(self.lattice_point(A))

    def ambient(self) -> TautExpression:
        """A representative in ``a_1..a_n`` (non-unique off the lattice)."""
        if self.k is not None:
            return self.expression
        d = 2 * self.g - 2 + self.n
        ks = sum((MultiPoly.var(avar(i + 1)) for i in range(self.n)), MultiPoly()) * Fraction(1, d)
        return self.expression.map_coefficients(lambda c: c.substitute({"k": ks}, partial=True))

    def max_degree(self) -> int:
        return max((c.degree() for _, c in self.expression.terms()), default=-1)

    def to_json(self) -> dict:
        doc = self.expression.to_json()
        for t, (_, c) in zip(doc["terms"], self.expression.terms()):
            t["coeff"] = c.to_json(self.variables)
        amb = self.ambient()
        amb_vars = [avar(i + 1) for i in range(self.n)]
        return {
            "g": self.g,
            "n": self.n,
            "k": self.k,
            "method": self.method,
            "lattice": {
                "variables": list(self.variables),
                "a_n": f"{2 * self.g - 2 + self.n}*k - (a_1 + ... + a_{self.n - 1})" if self.k is None else None,
                "terms": doc["terms"],
            },
            "ambient_representative": {
                "variables": amb_vars,
                "constraint": f"sum(A) divisible by {2 * self.g - 2 + self.n}",
                "terms": [
                    dict(s.to_json(), coeff=c.to_json(amb_vars)) for s, c in amb.terms()
                ],
            },
            "certificate": self.certificate,
        }


def _lattice_setup(g: int, n: int, k: Optional[int]):
    d = 2 * g - 2 + n
    if d <= 0:
        raise DomainError(f"(g, n) = ({g}, {n}) is unstable")
    if n == 0:
        raise DomainError("polynomial families need at least one leg")
    variables = [avar(i + 1) for i in range(n - 1)]
    basis = []
    for i in range(n - 1):
        u = [0] * n
        u[i] = 1
        u[n - 1] = -1
        basis.append(u)
    origin = [0] * n
    if k is None:
        u = [0] * n
        u[n - 1] = d
        basis.append(u)
        variables.append("k")
    else:
        origin[n - 1] = d * k
    return d, basis, origin, variables


def _fit(g, n, k, max_degree, threads):
    d, basis, origin, variables = _lattice_setup(g, n, k)
    rank = len(basis)
    strata: Dict[bytes, DecoratedStratum] = {}

    def sampler(A):
        kk = sum(A) // d
        expr = dr_cycle(g, n, A, kk, threads=threads)
        for key, (s, _) in expr._terms.items():
            strata.setdefault(key, s)
        return expr.coefficient_map()

    degree = 2 * g
    last = None
    while degree <= max_degree:
        try:
            design = simplex_design(rank, degree)
            fitted, cert = fit_many_on_lattice(sampler, basis, degree, design, origin=origin, variables=variables)
            expr = TautExpression(g, n)
            for key in sorted(fitted):
                expr._terms[key] = (strata[key], fitted[key])
            cert = dict(cert, method="fit")
            return expr, variables, cert
        except NotPolynomialError as exc:
            last = exc
            degree += 1
    raise NotPolynomialError(
        f"no fit up to degree {max_degree}", best=getattr(last, "best", None), mismatches=getattr(last, "mismatches", [])
    )


def _recursion(g, n, k, threads):
    d, _, _, variables = _lattice_setup(g, n, k)
    A = [MultiPoly.var(avar(i + 1)) for i in range(n - 1)]
    kv = MultiPoly.var("k") if k is None else MultiPoly.const(k)
    A.append(kv * d - sum(A, MultiPoly()))
    to_lattice = {avar(i + 1): A[i] for i in range(n)}
    to_lattice["k"] = kv

    def provider(G):
        nE = len(G.edges)
        out: RawTerms = {}
        for ms in _edge_budgets(nE, g - nE):
            mono = _edge_monomial(G, ms)
            Q = MultiPoly.monomial({xvar(h): e for h, e in mono})
            poly = twisted_S_polynomial(G, Q).substitute(to_lattice, partial=True)
            if not poly:
                continue
            const = Fraction(1)
            for m in ms:
                const *= edge_coefficient(m)
            for deco, mult in _expand_psi(G, ms):
                out[deco] = out.get(deco, MultiPoly()) + poly * (const * mult)
        return {dd: c for dd, c in out.items() if c}

    expr = _assemble(g, n, A, kv, provider, threads)
    return expr, variables, {"method": "recursion"}


def dr_polynomial(
    g: int,
    n: int,
    k: Optional[int] = None,
    method: str = "fit",
    *,
    max_degree: Optional[int] = None,
    threads: int = 1,
) -> DRPolynomial:
    """DR_g as a stratum-indexed family of polynomials in A."""
    if max_degree is None:
        max_degree = 2 * g + 2
    if method == "fit":
        expr, variables, cert = _fit(g, n, k, max_degree, threads)
    elif method == "recursion":
        expr, variables, cert = _recursion(g, n, k, threads)
    else:
        raise DomainError(f"unknown method {method!r}")
    expr = expr.map_coefficients(MultiPoly.coerce)
    return DRPolynomial(g, n, k, method, expr, tuple(variables), cert)


def permute_legs(expr: TautExpression, sigma: Sequence[int]) -> TautExpression:
    """Relabel legs so that new leg ``i`` is old leg ``sigma[i]`` (0-based).

    ``dr_cycle(g, n, [A[s] for s in sigma], k)`` equals
    ``permute_legs(dr_cycle(g, n, A, k), sigma)``.
    """
    if sorted(sigma) != list(range(expr.n)):
        raise DomainError(f"{sigma} is not a permutation of the {expr.n} legs")
    out = TautExpression(expr.g, expr.n)
    for s, c in expr.terms():
        G = s.graph
        moved = StableGraph(G.vertices, G.half_edges, G.attach, G.involution, tuple(G.legs[j] for j in sigma))
        out.add(DecoratedStratum(moved, s.psi, s.kappa), c)
    return out
