"""Sums of polynomials over weightings mod r, their constant terms, and
the recursive construction of those constant terms as polynomials in A.

Throughout, ``A`` lists the leg values in leg order and ``k`` is the
twist: a weighting mod r assigns residues to half-edges with legs fixed
to ``a_i mod r``, opposite halves summing to 0, and the half-edges at a
vertex ``v`` summing to ``k(2g(v) - 2 + n(v))``.

Q-polynomials use the variables ``x_<half-edge id>``; only non-leg
half-edges are admissible.
"""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, NotYetPolynomialError
from .exact import MultiPoly, stable_interpolation, sum_range_closed_form
from .exact.interpolate import prime_factors
from .graphs import Edge, StableGraph, add_legs, cut_edge, is_separating, spanning_tree, subgraph

Mono = Tuple[Tuple[int, int], ...]

_XVAR = re.compile(r"^x_(\d+)$")


def xvar(h: int) -> str:
    return f"x_{h}"


def avar(i: int) -> str:
    """Variable of the i-th leg value (1-based)."""
    return f"a_{i}"


def bvar(v: int) -> str:
    """Variable of the leg-value total at vertex ``v``."""
    return f"b_{v}"


# ramification data ------------------------------------------------------


@dataclass(frozen=True)
class RamVector:
    """Leg values ``a_1..a_n`` with twist ``k`` for ambient ``(g, n)``."""

    entries: Tuple[int, ...]
    k: int
    g: int
    n: int

    def __post_init__(self):
        if len(self.entries) != self.n:
            raise DomainError(f"A has {len(self.entries)} entries, expected {self.n}")
        if sum(self.entries) != self.k * (2 * self.g - 2 + self.n):
            raise DomainError(
                f"sum(A) = {sum(self.entries)} differs from k(2g-2+n) = {self.k * (2 * self.g - 2 + self.n)}"
            )

    @classmethod
    def for_graph(cls, graph: StableGraph, A: Sequence[int], k: int = 0) -> "RamVector":
        return cls(tuple(int(a) for a in A), int(k), graph.genus, graph.n_legs)

    def shifted(self, i1: int, i2: int, a: int) -> "RamVector":
        """``A_a``: subtract ``a`` at leg i1, add it at leg i2 (0-based)."""
        e = list(self.entries)
        e[i1] -= a
        e[i2] += a
        return RamVector(tuple(e), self.k, self.g, self.n)


def vertex_targets(graph: StableGraph, A: Sequence[int], k: int = 0) -> Dict[int, int]:
    """Required total of the non-leg half-edge weights at each vertex."""
    A = [int(a) for a in A]
    if len(A) != graph.n_legs:
        raise DomainError(f"A has {len(A)} entries, graph has {graph.n_legs} legs")
    att = graph.attach_map
    t = {v: k * (2 * gv - 2 + graph.valence(v)) for v, gv in graph.vertices}
    for a, h in zip(A, graph.legs):
        t[att[h]] -= a
    for comp in graph.components:
        if sum(t[v] for v in comp) != 0:
            raise DomainError("leg values do not sum to k(2g-2+n) on every component")
    return t


# Q handling --------------------------------------------------------------


def monomials_of(graph: StableGraph, Q) -> List[Tuple[Mono, Fraction]]:
    """Split Q into ``(monomial, coefficient)`` pairs keyed by half-edge."""
    Q = MultiPoly.coerce(Q)
    legs = set(graph.legs)
    nonleg = set(graph.nonleg_half_edges)
    out = []
    for mono, c in Q.items():
        hs = []
        for v, e in mono:
            m = _XVAR.match(v)
            if not m:
                raise DomainError(f"variable {v!r} is not of the form x_<half-edge>")
            h = int(m.group(1))
            if h in legs:
                raise DomainError(f"leg {h} cannot be a variable of Q")
            if h not in nonleg:
                raise DomainError(f"half-edge {h} is not in the graph")
            hs.append((h, e))
        out.append((tuple(sorted(hs)), c))
    out.sort()
    return out


def mono_poly(mono: Mono) -> MultiPoly:
    return MultiPoly.monomial({xvar(h): e for h, e in mono})


def mono_degree(mono: Mono) -> int:
    return sum(e for _, e in mono)


# weighting structure ---------------------------------------------------


@dataclass(frozen=True)
class _Structure:
    vertex_index: Dict[int, int]
    free: Tuple[int, ...]
    forms: Dict[int, Tuple[Tuple[int, ...], Tuple[int, ...]]]
    components: Tuple[Tuple[int, ...], ...]


@lru_cache(maxsize=4096)
def _structure(graph: StableGraph) -> _Structure:
    """Solve the vertex conditions along a spanning forest.

    Each non-leg half-edge weight is an affine form
    ``sum_v tc[v] * t_v + sum_i xc[i] * x_i`` in the vertex targets and
    one free residue per non-tree edge.
    """
    att = graph.attach_map
    inv = graph.inv_map
    vidx = {v: i for i, v in enumerate(graph.vertex_ids)}
    nv = len(vidx)
    parent_half: Dict[int, int] = {}
    order: List[int] = []
    tree_halves = set()
    for comp in graph.components:
        root = comp[0]
        seen = {root}
        queue = [root]
        order.append(root)
        while queue:
            v = queue.pop(0)
            for h in graph.half_edges_at[v]:
                hp = inv[h]
                if hp == h or h in tree_halves:
                    continue
                w = att[hp]
                if w not in seen:
                    seen.add(w)
                    parent_half[w] = hp
                    tree_halves.update((h, hp))
                    order.append(w)
                    queue.append(w)
    free = []
    for h, hp in graph.edges:
        if h not in tree_halves:
            free.append(h)
    nf = len(free)
    forms: Dict[int, Tuple[List[int], List[int]]] = {}
    for i, h in enumerate(free):
        xc = [0] * nf
        xc[i] = 1
        forms[h] = ([0] * nv, xc)
        forms[inv[h]] = ([0] * nv, [-c for c in xc])
    for v in reversed(order):
        if v not in parent_half:
            continue
        hv = parent_half[v]
        tc = [0] * nv
        xc = [0] * nf
        tc[vidx[v]] = 1
        for h in graph.half_edges_at[v]:
            if h == hv or inv[h] == h:
                continue
            ftc, fxc = forms[h]
            tc = [a - b for a, b in zip(tc, ftc)]
            xc = [a - b for a, b in zip(xc, fxc)]
        forms[hv] = (tc, xc)
        forms[inv[hv]] = ([-c for c in tc], [-c for c in xc])
    return _Structure(
        vidx,
        tuple(free),
        {h: (tuple(tc), tuple(xc)) for h, (tc, xc) in forms.items()},
        tuple(tuple(vidx[v] for v in comp) for comp in graph.components),
    )


def _consistent(st: _Structure, tvec: Sequence[int], r: int) -> bool:
    return all(sum(tvec[i] for i in comp) % r == 0 for comp in st.components)


def _grid(r: int, nf: int, first: range) -> np.ndarray:
    if nf == 0:
        return np.zeros((1, 0), dtype=np.int64)
    axes = [np.arange(first.start, first.stop, dtype=np.int64)] + [np.arange(r, dtype=np.int64)] * (nf - 1)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def _chunk_sums(st: _Structure, tvec, r: int, monos: Sequence[Mono], first: range) -> List[int]:
    grid = _grid(r, len(st.free), first)
    rows = grid.shape[0]
    needed = {h for mono in monos for h, _ in mono}
    vals = {}
    for h in needed:
        tc, xc = st.forms[h]
        c = sum(a * b for a, b in zip(tc, tvec)) % r
        if any(xc):
            vals[h] = (grid @ np.array(xc, dtype=np.int64) + c) % r
        else:
            vals[h] = np.full(rows, c, dtype=np.int64)
    out = []
    for mono in monos:
        deg = mono_degree(mono)
        if not mono:
            out.append(rows)
            continue
        exact_int64 = (r - 1) ** deg * rows < 2**62
        acc = None
        for h, e in mono:
            v = vals[h] if exact_int64 else vals[h].astype(object)
            term = v**e
            acc = term if acc is None else acc * term
        out.append(int(acc.sum()))
    return out


def _sums_from_targets(
    graph: StableGraph, tvec: Sequence[int], r: int, monos: Sequence[Mono], threads: int = 1
) -> List[Fraction]:
    st = _structure(graph)
    if r < 1:
        raise DomainError("modulus r must be a positive integer")
    if not _consistent(st, tvec, r):
        return [Fraction(0)] * len(monos)
    nf = len(st.free)
    if nf == 0 or threads <= 1 or r < 2:
        chunks = [range(0, r if nf else 1)]
    else:
        step = -(-r // threads)
        chunks = [range(s, min(s + step, r)) for s in range(0, r, step)]
    if len(chunks) == 1:
        partials = [_chunk_sums(st, tvec, r, monos, chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(lambda ch: _chunk_sums(st, tvec, r, monos, ch), chunks))
    norm = Fraction(1, r**graph.h1)
    return [sum(p[i] for p in partials) * norm for i in range(len(monos))]


def _tvec(graph: StableGraph, A, k) -> List[int]:
    t = vertex_targets(graph, A, k)
    return [t[v] for v in graph.vertex_ids]


# public sums -----------------------------------------------------------


@dataclass(frozen=True)
class Weighting:
    values: Tuple[Tuple[int, int], ...]
    r: int

    def __getitem__(self, h: int) -> int:
        return dict(self.values)[h]

    def as_dict(self) -> Dict[int, int]:
        return dict(self.values)


def enumerate_weightings(graph: StableGraph, A: Sequence[int], r: int, k: int = 0) -> Iterator[Weighting]:
    """Every weighting mod r, once; r**h1 of them."""
    tvec = _tvec(graph, A, k)
    st = _structure(graph)
    if not _consistent(st, tvec, r):
        return
    grid = _grid(r, len(st.free), range(0, r if st.free else 1))
    legvals = {h: int(a) % r for h, a in zip(graph.legs, A)}
    consts = {h: sum(a * b for a, b in zip(tc, tvec)) for h, (tc, _) in st.forms.items()}
    for row in grid:
        vals = dict(legvals)
        for h, (_, xc) in st.forms.items():
            vals[h] = (consts[h] + sum(int(c) * int(x) for c, x in zip(xc, row))) % r
        yield Weighting(tuple((h, vals[h]) for h in graph.half_edges), r)


@dataclass
class SumResult:
    """An exact sum value with its provenance."""

    value: Fraction
    graph: str
    A: Tuple[int, ...]
    k: int
    r: object
    Q: str
    certificate: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "value": {"num": str(self.value.numerator), "den": str(self.value.denominator)},
            "graph": self.graph,
            "A": list(self.A),
            "k": self.k,
            "r": self.r,
            "Q": self.Q,
            "certificate": self.certificate,
        }


def _graph_tag(graph: StableGraph) -> str:
    from .graphs import canonical_form

    return canonical_form(graph).hex


def sum_S(graph: StableGraph, A: Sequence[int], r: int, Q, k: int = 0, *, threads: int = 1) -> SumResult:
    """``r^{-h1} * sum over weightings mod r of Q(w)``, exactly."""
    tvec = _tvec(graph, A, k)
    terms = monomials_of(graph, Q)
    vals = _sums_from_targets(graph, tvec, r, [m for m, _ in terms], threads)
    value = sum((c * v for (_, c), v in zip(terms, vals)), Fraction(0))
    return SumResult(value, _graph_tag(graph), tuple(A), k, r, str(MultiPoly.coerce(Q)))


def default_window_start(graph: StableGraph, A: Sequence[int], k: int, degree: int) -> int:
    t = vertex_targets(graph, A, k)
    spread = max([abs(int(a)) for a in A] + [sum(abs(x) for x in t.values())])
    return 2 * (spread + degree) + 3


class _Sampler:
    """Memoized batch of monomial sums over r for fixed targets."""

    def __init__(self, graph, tvec, monos, threads=1):
        self.graph = graph
        self.tvec = list(tvec)
        self.monos = list(monos)
        self.threads = threads
        self.cache: Dict[int, List[Fraction]] = {}

    def __call__(self, r: int) -> List[Fraction]:
        if r not in self.cache:
            self.cache[r] = _sums_from_targets(self.graph, self.tvec, r, self.monos, self.threads)
        return self.cache[r]


def _constant_terms_targets(
    graph: StableGraph,
    tvec: Sequence[int],
    monos: Sequence[Mono],
    start: int,
    *,
    threads: int = 1,
    primes_only: bool = False,
) -> List[Tuple[Fraction, dict]]:
    sampler = _Sampler(graph, tvec, monos, threads)
    out = []
    for i, mono in enumerate(monos):
        poly, cert = stable_interpolation(
            lambda r, i=i: sampler(r)[i],
            degree_hint=mono_degree(mono),
            validation_count=5,
            start=start,
            primes_only=primes_only,
        )
        out.append((poly.constant_term(), cert))
    return out


def constant_terms(
    graph: StableGraph,
    A: Sequence[int],
    k: int,
    monos: Sequence[Mono],
    *,
    start: Optional[int] = None,
    threads: int = 1,
    primes_only: bool = False,
) -> List[Tuple[Fraction, dict]]:
    """Constant terms in r of many monomial sums, sharing r-samples."""
    tvec = _tvec(graph, A, k)
    if start is None:
        start = default_window_start(graph, A, k, max([mono_degree(m) for m in monos], default=0))
    return _constant_terms_targets(graph, tvec, monos, start, threads=threads, primes_only=primes_only)


def constant_term_S(
    graph: StableGraph,
    A: Sequence[int],
    Q,
    k: int = 0,
    *,
    start: Optional[int] = None,
    threads: int = 1,
    primes_only: bool = False,
) -> SumResult:
    """The constant term of the eventual polynomial ``r -> S_{A,r}(Q)``."""
    terms = monomials_of(graph, Q)
    res = constant_terms(graph, A, k, [m for m, _ in terms], start=start, threads=threads, primes_only=primes_only)
    value = sum((c * v for (_, c), (v, _) in zip(terms, res)), Fraction(0))
    certs = [dict(cert, monomial=[list(p) for p in m]) for (m, _), (_, cert) in zip(terms, res)]
    excluded = sorted({p for c in certs for p in c["excluded_moduli"]})
    return SumResult(
        value,
        _graph_tag(graph),
        tuple(A),
        k,
        "ct",
        str(MultiPoly.coerce(Q)),
        {"monomials": certs, "excluded_moduli": excluded},
    )


# congruence -------------------------------------------------------------


@dataclass(frozen=True)
class CongruenceCheck:
    status: str  # "holds", "fails" or "inconclusive"
    r: int
    at_r: Fraction
    constant_term: Fraction

    def __bool__(self) -> bool:
        if self.status == "inconclusive":
            raise DomainError("inconclusive congruence check has no truth value")
        return self.status == "holds"


def check_congruence(graph: StableGraph, A: Sequence[int], Q, r: int, k: int = 0) -> CongruenceCheck:
    """Does ``S_{A,0}(Q) = S_{A,r}(Q) (mod r)`` hold at the prime r?"""
    at_r = sum_S(graph, A, r, Q, k).value
    ct = constant_term_S(graph, A, Q, k).value
    if at_r.denominator % r == 0 or ct.denominator % r == 0:
        return CongruenceCheck("inconclusive", r, at_r, ct)
    diff = at_r - ct
    status = "holds" if diff.numerator % r == 0 else "fails"
    return CongruenceCheck(status, r, at_r, ct)


# reduction to k = 0 ------------------------------------------------------


def reduce_to_k0(graph: StableGraph, A: Sequence[int], k: int) -> Tuple[StableGraph, Tuple[int, ...]]:
    """Add a leg at every vertex carrying ``-k(2g(v) - 2 + n(v))``."""
    RamVector.for_graph(graph, A, k)
    extra = [-k * (2 * gv - 2 + graph.valence(v)) for v, gv in graph.vertices]
    return add_legs(graph, graph.vertex_ids), tuple(int(a) for a in A) + tuple(extra)


# separating edges ---------------------------------------------------------


def _split_at(graph: StableGraph, e: Edge):
    cut = cut_edge(graph, e)
    if len(cut.components) != 2:
        raise DomainError(f"edge {e} is not separating")
    att = graph.attach_map
    h1, h2 = e
    comp1 = next(c for c in cut.components if att[h1] in c)
    comp2 = next(c for c in cut.components if att[h2] in c)
    g1, pos1 = subgraph(cut, comp1)
    g2, pos2 = subgraph(cut, comp2)
    return cut, (g1, pos1), (g2, pos2)


def factor_separating(graph: StableGraph, e: Edge, A: Sequence[int], Q, k: int = 0, *, threads: int = 1) -> SumResult:
    """Constant term via the product over the two sides of a separating edge."""
    if k != 0:
        raise DomainError("factor_separating needs k = 0; apply reduce_to_k0 first")
    RamVector.for_graph(graph, A, 0)
    if not is_separating(graph, e):
        raise DomainError(f"edge {e} is not separating")
    h1, h2 = e
    cut, (g1, pos1), (g2, pos2) = _split_at(graph, e)
    n = graph.n_legs
    A = [int(a) for a in A]
    s1 = sum(A[i] for i in pos1 if i < n)
    s2 = sum(A[i] for i in pos2 if i < n)
    A1 = [A[i] if i < n else -s1 for i in pos1]
    A2 = [A[i] if i < n else -s2 for i in pos2]
    total = Fraction(0)
    for mono, coeff in monomials_of(graph, Q):
        exps = dict(mono)
        c1 = exps.pop(h1, 0)
        c2 = exps.pop(h2, 0)
        side1 = {xvar(h): p for h, p in exps.items() if h in set(g1.half_edges)}
        side2 = {xvar(h): p for h, p in exps.items() if h in set(g2.half_edges)}
        f1 = constant_term_S(g1, A1, MultiPoly.monomial(side1), threads=threads).value
        f2 = constant_term_S(g2, A2, MultiPoly.monomial(side2), threads=threads).value
        total += coeff * f1 * Fraction(-s1) ** c1 * Fraction(-s2) ** c2 * f2
    return SumResult(total, _graph_tag(graph), tuple(A), 0, "ct", str(MultiPoly.coerce(Q)), {"method": "separating"})


# polynomials in A ---------------------------------------------------------


_X = ("X0", "X1", "X2", "X3")


def _divide_by_var(p: MultiPoly, var: str) -> MultiPoly:
    out = {}
    for mono, c in p.items():
        exps = dict(mono)
        if exps.get(var, 0) == 0:
            raise DomainError(f"{p} is not divisible by {var}")
        exps[var] -= 1
        out[tuple(exps.items())] = c
    return MultiPoly(out)


@lru_cache(maxsize=None)
def shift_kernels(c1: int, c2: int) -> Tuple[MultiPoly, MultiPoly]:
    """The polynomials p0 and p1 with p = p0 + X3 * p1.

    ``p = (X0 + X1 - X3)^c1 (X2 - X0 - X1 + X3)^c2`` rewrites
    ``((w + a) mod r)^c1 ((w' - a) mod r)^c2`` with X0 = w, X1 = a,
    X2 = r and X3 = r * floor((w + a) / r).
    """
    x0, x1, x2, x3 = (MultiPoly.var(v) for v in _X)
    p = (x0 + x1 - x3) ** c1 * (x2 - x0 - x1 + x3) ** c2
    p0 = p.substitute({"X3": 0}, partial=True)
    p1 = _divide_by_var(p - p0, "X3") if p != p0 else MultiPoly()
    return p0, p1


def _shift_psi(
    h1: int,
    h2: int,
    mono: Mono,
    base: Callable[[Mono], MultiPoly],
    q: MultiPoly,
    shift: str = "a",
    jvar: str = "j",
) -> MultiPoly:
    """Constant term of S_{A_a,r}(Q) as S_1 + S_2 - S_3.

    ``base(m)`` is the constant term at the unshifted A for monomial m;
    ``q`` is the constant term on the cut graph with new legs (-j, j).
    """
    exps = dict(mono)
    c1 = exps.pop(h1, 0)
    c2 = exps.pop(h2, 0)
    q0 = tuple(sorted(exps.items()))
    p0, p1 = shift_kernels(c1, c2)
    a = MultiPoly.var(shift)
    # S_1: the r-free part of p0, each x_{h1}^alpha term read through base
    s1 = MultiPoly()
    for e2, part in p0.coefficients_in("X2").items():
        if e2:
            continue
        for e0, rest in part.coefficients_in("X0").items():
            rest_a = rest.substitute({"X1": a}, partial=True)
            m = dict(q0)
            if e0:
                m[h1] = e0
            m = tuple(sorted(m.items()))
            s1 = s1 + rest_a * base(m)
    # S_2: sum_{j=1}^{a} p1(-j, a, 0, 0) q(A, j)
    j = MultiPoly.var(jvar)
    kernel = p1.substitute({"X0": -j, "X1": a, "X2": 0, "X3": 0}, partial=True)
    s2 = sum_range_closed_form(kernel * q, jvar, shift) if kernel else MultiPoly()
    # S_3: boundary term, only c1 = 0 < c2 contributes and only for c2 = 1
    s3 = q.substitute({jvar: a}, partial=True) if (c1 == 0 and c2 == 1) else MultiPoly()
    return s1 + s2 - s3


def _charge_target_poly(graph: StableGraph):
    """Constant-term polynomials in vertex charges for a connected graph.

    Returns a function ``mono -> MultiPoly`` in the variables ``b_<v>``,
    valid wherever the charges sum to zero. The charge of a vertex is
    the total of the leg values attached to it (k = 0).
    """
    return lambda mono: _charge_poly(graph, mono)


@lru_cache(maxsize=None)
def _ct_at_zero(graph: StableGraph, mono: Mono) -> Fraction:
    tvec = [0] * len(graph.vertices)
    start = 2 * mono_degree(mono) + 3
    return _constant_terms_targets(graph, tvec, [mono], start)[0][0]


@lru_cache(maxsize=None)
def _charge_poly(graph: StableGraph, mono: Mono) -> MultiPoly:
    if not graph.is_connected():
        raise DomainError("charge polynomials are built per connected graph")
    if not graph.edges:
        return MultiPoly.const(1)
    att = graph.attach_map
    for e in graph.edges:
        if is_separating(graph, e):
            return _charge_poly_separating(graph, e, mono)
    tree, order = spanning_tree(graph)

    @lru_cache(maxsize=None)
    def level(kk: int, m: Mono) -> MultiPoly:
        if kk == 1:
            return MultiPoly.const(_ct_at_zero(graph, m))
        hp, hu = tree[kk - 2]
        p, u = att[hp], att[hu]
        active = set(order[: kk - 1])
        cut = cut_edge(graph, (hp, hu))
        qsub = {bvar(v): (MultiPoly.var(bvar(v)) if v in active else MultiPoly()) for v in graph.vertex_ids}
        j = MultiPoly.var("j")
        qsub[bvar(p)] = qsub[bvar(p)] - j
        qsub[bvar(u)] = qsub[bvar(u)] + j
        exps = dict(m)
        exps.pop(hp, None)
        exps.pop(hu, None)
        q0 = tuple(sorted(exps.items()))
        q = _charge_poly(cut, q0).substitute(qsub, partial=True)
        psi = _shift_psi(hp, hu, m, lambda mm: level(kk - 1, mm), q)
        back = {"a": MultiPoly.var(bvar(u)), bvar(p): MultiPoly.var(bvar(p)) + MultiPoly.var(bvar(u))}
        return psi.substitute(back, partial=True)

    return level(len(order), mono)


def _charge_poly_separating(graph: StableGraph, e: Edge, mono: Mono) -> MultiPoly:
    h1, h2 = e
    att = graph.attach_map
    _, (g1, _), (g2, _) = _split_at(graph, e)
    exps = dict(mono)
    c1 = exps.pop(h1, 0)
    c2 = exps.pop(h2, 0)
    hs1 = set(g1.half_edges)
    m1 = tuple((h, p) for h, p in sorted(exps.items()) if h in hs1)
    m2 = tuple((h, p) for h, p in sorted(exps.items()) if h not in hs1)
    s1 = sum((MultiPoly.var(bvar(v)) for v in g1.vertex_ids), MultiPoly())
    s2 = sum((MultiPoly.var(bvar(v)) for v in g2.vertex_ids), MultiPoly())
    # the new leg on each side carries minus that side's charge total
    sub1 = {bvar(att[h1]): MultiPoly.var(bvar(att[h1])) - s1}
    sub2 = {bvar(att[h2]): MultiPoly.var(bvar(att[h2])) - s2}
    f1 = _charge_poly(g1, m1).substitute(sub1, partial=True)
    f2 = _charge_poly(g2, m2).substitute(sub2, partial=True)
    return f1 * (-s1) ** c1 * (-s2) ** c2 * f2


def _charges_in_legs(graph: StableGraph, leg_values: Sequence[MultiPoly]) -> Dict[str, MultiPoly]:
    att = graph.attach_map
    sub = {bvar(v): MultiPoly() for v in graph.vertex_ids}
    for h, val in zip(graph.legs, leg_values):
        sub[bvar(att[h])] = sub[bvar(att[h])] + val
    return sub


def build_S_polynomial(graph: StableGraph, Q) -> MultiPoly:
    """``A -> S_{A,0}(Q)`` on ``{sum(A) = 0}`` as a polynomial in ``a_1..a_n``.

    The representative is one of many on the sublattice; compare
    polynomials after :func:`to_zero_sum_coordinates`.
    """
    if not graph.is_connected():
        raise DomainError("build_S_polynomial needs a connected graph")
    sub = _charges_in_legs(graph, [MultiPoly.var(avar(i + 1)) for i in range(graph.n_legs)])
    out = MultiPoly()
    for mono, c in monomials_of(graph, Q):
        out = out + c * _charge_poly(graph, mono).substitute(sub, partial=True)
    return out


def to_zero_sum_coordinates(p: MultiPoly, n: int) -> MultiPoly:
    """Eliminate ``a_n = -(a_1 + ... + a_{n-1})``."""
    if n == 0:
        return p
    rest = sum((MultiPoly.var(avar(i)) for i in range(1, n)), MultiPoly())
    return p.substitute({avar(n): -rest}, partial=True)


def twisted_S_polynomial(graph: StableGraph, Q) -> MultiPoly:
    """``(A, k) -> S_{A,0}(Q)`` on ``{sum(A) = k(2g-2+n)}``, in ``a_1..a_n, k``."""
    if not graph.is_connected():
        raise DomainError("twisted_S_polynomial needs a connected graph")
    kv = MultiPoly.var("k")
    sub = _charges_in_legs(graph, [MultiPoly.var(avar(i + 1)) for i in range(graph.n_legs)])
    for v, gv in graph.vertices:
        sub[bvar(v)] = sub[bvar(v)] - kv * (2 * gv - 2 + graph.valence(v))
    out = MultiPoly()
    for mono, c in monomials_of(graph, Q):
        out = out + c * _charge_poly(graph, mono).substitute(sub, partial=True)
    return out


# shift recursion ------------------------------------------------------------


@dataclass
class ShiftResult:
    result: SumResult
    psi: MultiPoly
    graph: StableGraph
    base_A: Tuple[int, ...]
    shifted_A: Tuple[int, ...]
    legs: Tuple[int, int]


def _designate_legs(graph: StableGraph, e: Edge, A, legs):
    att = graph.attach_map
    v1, v2 = att[e[0]], att[e[1]]
    if legs is not None:
        i1, i2 = legs
        for i, v in ((i1, v1), (i2, v2)):
            if not 0 <= i < graph.n_legs or att[graph.legs[i]] != v:
                raise DomainError(f"designated leg {i} is not attached to vertex {v}")
        if i1 == i2:
            raise DomainError("designated legs must be distinct")
        return graph, list(A), (i1, i2)
    A = list(A)
    chosen = []
    for v in (v1, v2):
        cand = [i for i, h in enumerate(graph.legs) if att[h] == v and i not in chosen]
        if not cand:
            graph = add_legs(graph, [v])
            att = graph.attach_map
            A.append(0)
            cand = [graph.n_legs - 1]
        chosen.append(cand[0])
    return graph, A, tuple(chosen)


def shift_recursion(
    graph: StableGraph, e: Edge, A: Sequence[int], a: int, Q, *, legs: Optional[Tuple[int, int]] = None
) -> ShiftResult:
    """``S_{A_a,0}(Q)`` from unshifted constant terms and the cut graph.

    ``A_a`` moves ``a`` from the leg at ``attach(h1)`` to the leg at
    ``attach(h2)``. Missing legs are supplied with value 0 unless
    ``legs`` designates them explicitly. The returned ``psi`` is a
    polynomial in the shift ``a`` with the unshifted constants evaluated
    at this A.
    """
    RamVector.for_graph(graph, A, 0)
    if is_separating(graph, e):
        raise DomainError(f"edge {e} is separating")
    graph, A, (i1, i2) = _designate_legs(graph, e, A, legs)
    h1, h2 = e
    att = graph.attach_map
    tvec = _tvec(graph, A, 0)
    charges = {v: -t for v, t in zip(graph.vertex_ids, tvec)}
    cut = cut_edge(graph, e)
    j = MultiPoly.var("j")
    qsub = {bvar(v): MultiPoly.const(c) for v, c in charges.items()}
    qsub[bvar(att[h1])] = qsub[bvar(att[h1])] - j
    qsub[bvar(att[h2])] = qsub[bvar(att[h2])] + j
    start = default_window_start(graph, A, 0, 0)
    psi = MultiPoly()
    for mono, coeff in monomials_of(graph, Q):
        exps = dict(mono)
        exps.pop(h1, None)
        exps.pop(h2, None)
        q = _charge_poly(cut, tuple(sorted(exps.items()))).substitute(qsub)

        def base(m, _start=start + 2 * mono_degree(mono)):
            return MultiPoly.const(_constant_terms_targets(graph, tvec, [m], _start)[0][0])

        psi = psi + coeff * _shift_psi(h1, h2, mono, base, q)
    value = psi.evaluate({"a": a}) if psi.variables else psi.constant_term()
    shifted = list(A)
    shifted[i1] -= a
    shifted[i2] += a
    res = SumResult(value, _graph_tag(graph), tuple(shifted), 0, "ct", str(MultiPoly.coerce(Q)), {"method": "shift"})
    return ShiftResult(res, psi, graph, tuple(A), tuple(shifted), (i1, i2))
