"""Acceptance criteria as runnable checks.

Each criterion takes a thread count and returns an :class:`Outcome`
whose ``payload`` is a deterministic rendering of everything it
computed; criterion 11 compares payloads across thread counts.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .exact import MultiPoly, stable_interpolation
from .exact.interpolate import admissible_nodes, is_prime
from .graphs import StableGraph, enumerate_stable_graphs, is_separating
from .pixton import dr_cycle, dr_cycle_interpolated, dr_polynomial, permute_legs
from .weightsum import (
    avar,
    build_S_polynomial,
    check_congruence,
    constant_term_S,
    default_window_start,
    factor_separating,
    monomials_of,
    reduce_to_k0,
    shift_recursion,
    sum_S,
    vertex_targets,
    xvar,
)


@dataclass
class Outcome:
    ok: bool
    detail: str
    payload: List[str] = field(default_factory=list)
    seconds: float = 0.0

    def digest(self) -> str:
        return hashlib.sha256("\n".join(self.payload).encode()).hexdigest()


# oracles ------------------------------------------------------------------


def brute_force_sum(graph: StableGraph, A: Sequence[int], r: int, Q, k: int = 0) -> Fraction:
    """Filter every map from non-leg half-edges to residues; no tree solve."""
    nonleg = list(graph.nonleg_half_edges)
    idx = {h: i for i, h in enumerate(nonleg)}
    att = graph.attach_map
    inv = graph.inv_map
    if nonleg:
        grids = np.meshgrid(*([np.arange(r, dtype=np.int64)] * len(nonleg)), indexing="ij")
        W = np.stack([g.reshape(-1) for g in grids], axis=1)
    else:
        W = np.zeros((1, 0), dtype=np.int64)
    keep = np.ones(W.shape[0], dtype=bool)
    for h in nonleg:
        keep &= (W[:, idx[h]] + W[:, idx[inv[h]]]) % r == 0
    legval = {h: int(a) for h, a in zip(graph.legs, A)}
    for v, gv in graph.vertices:
        total = np.zeros(W.shape[0], dtype=np.int64)
        const = 0
        for h in graph.half_edges_at[v]:
            if h in idx:
                total += W[:, idx[h]]
            else:
                const += legval[h]
        keep &= (total + const - k * (2 * gv - 2 + graph.valence(v))) % r == 0
    W = W[keep]
    acc = 0
    for mono, c in MultiPoly.coerce(Q).items():
        col = np.ones(W.shape[0], dtype=object)
        for var, e in mono:
            col = col * W[:, idx[int(var[2:])]].astype(object) ** e
        acc += c * int(col.sum())
    return Fraction(acc) / r**graph.h1


def loop_graph() -> StableGraph:
    return StableGraph.from_edges([0], [0], [(0, 0)])


def banana_graph() -> StableGraph:
    return StableGraph.from_edges([0, 0], [0, 1], [(0, 1), (0, 1)])


def loop_bridge_graph() -> StableGraph:
    """Genus-0 vertex with a loop, bridged to a genus-0 vertex with both legs."""
    return StableGraph.from_edges([0, 0], [1, 1], [(0, 0), (0, 1)])


# instance generators --------------------------------------------------------


def random_A(rng: random.Random, n: int, total: int, spread: int = 4) -> List[int]:
    if n == 0:
        return []
    A = [rng.randint(-spread, spread) for _ in range(n - 1)]
    return A + [total - sum(A)]


def random_A_for(rng: random.Random, graph: StableGraph, k: int, spread: int = 4) -> List[int]:
    """Random leg values with vertex targets summing to zero."""
    n = graph.n_legs
    d = 2 * graph.genus - 2 + n
    if n == 0:
        return []
    return random_A(rng, n, k * d, spread)


def random_monomial(rng: random.Random, graph: StableGraph, max_degree: int) -> MultiPoly:
    hs = list(graph.nonleg_half_edges)
    p = MultiPoly.const(1)
    if not hs:
        return p
    for _ in range(rng.randint(0, max_degree)):
        p = p * MultiPoly.var(xvar(rng.choice(hs)))
    return p


def _small_graphs(max_edges: int = 3) -> List[Tuple[int, int, StableGraph]]:
    out = []
    for g, n in [(1, 1), (1, 2), (2, 0), (2, 1), (2, 2)]:
        for G in enumerate_stable_graphs(g, n):
            if len(G.edges) <= max_edges:
                out.append((g, n, G))
    return out


def _instances(seed: int, per_graph: int) -> List[Tuple[StableGraph, List[int], int, MultiPoly]]:
    rng = random.Random(seed)
    out = []
    for g, n, G in _small_graphs():
        for _ in range(per_graph):
            k = rng.choice([0, 1]) if n else 0
            out.append((G, random_A_for(rng, G, k), k, random_monomial(rng, G, 4)))
    return out


def _fmt(x) -> str:
    return str(x)


# criteria -------------------------------------------------------------------


def criterion_1(threads: int = 1) -> Outcome:
    G = loop_graph()
    h, hp = G.edges[0]
    Q = MultiPoly.var(xvar(h)) * MultiPoly.var(xvar(hp))
    bad = []
    payload = []
    for r in range(1, 61):
        v = sum_S(G, [0], r, Q, threads=threads).value
        direct = Fraction(sum(w * (r - w) for w in range(1, r)), r)
        payload.append(f"{r}:{v}")
        if v != Fraction(r * r - 1, 6) or v != direct:
            bad.append(r)
    ct = constant_term_S(G, [0], Q, threads=threads).value
    payload.append(f"ct:{ct}")
    ok = not bad and ct == Fraction(-1, 6)
    return Outcome(ok, f"r in 1..60 mismatches {bad}; constant term {ct}", payload)


def criterion_2(threads: int = 1, seed: int = 2) -> Outcome:
    rng = random.Random(seed)
    checked = 0
    bad = []
    payload = []
    for g, n, G in _small_graphs():
        k = rng.choice([0, 1]) if n else 0
        A = random_A_for(rng, G, k)
        monos = [random_monomial(rng, G, 4) for _ in range(5)]
        for r in range(2, 8):
            for Q in monos:
                v = sum_S(G, A, r, Q, k, threads=threads).value
                if v != brute_force_sum(G, A, r, Q, k):
                    bad.append((G.dumps(), A, k, r, str(Q)))
                payload.append(f"{G.dumps()}|{A}|{k}|{r}|{Q}|{v}")
                checked += 1
    return Outcome(not bad, f"{checked} sums checked, {len(bad)} mismatches", payload)


def _certified(G, A, k, Q, threads, *, primes_only=False):
    terms = monomials_of(G, Q)
    deg = max((sum(e for _, e in m) for m, _ in terms), default=0)
    start = default_window_start(G, A, k, deg)
    poly, cert = stable_interpolation(
        lambda r: sum_S(G, A, r, Q, k, threads=threads).value,
        degree_hint=deg,
        start=start,
        primes_only=primes_only,
    )
    return poly, cert


def criterion_3(threads: int = 1, seed: int = 3) -> Outcome:
    bad = []
    payload = []
    count = 0
    for G, A, k, Q in _instances(seed, 10):
        poly, cert = _certified(G, A, k, Q, threads)
        beyond = cert["validation"][-1]
        fresh = list(range(beyond + 1, beyond + 6))
        for r in fresh:
            if poly.evaluate({"r": r}) != sum_S(G, A, r, Q, k, threads=threads).value:
                bad.append((G.dumps(), A, k, str(Q), r))
        ct = constant_term_S(G, A, Q, k, threads=threads).value
        if ct != poly.constant_term():
            bad.append((G.dumps(), A, k, str(Q), "ct"))
        payload.append(f"{G.dumps()}|{A}|{k}|{Q}|{poly}|{json.dumps(cert)}")
        count += 1
    return Outcome(not bad, f"{count} instances certified, {len(bad)} failures on fresh nodes", payload)


def criterion_4(threads: int = 1, seed: int = 3) -> Outcome:
    primes = [p for p in range(50, 201) if is_prime(p)]
    bad = []
    inconclusive = 0
    payload = []
    count = 0
    for G, A, k, Q in _instances(seed, 10):
        deg = max((sum(e for _, e in m) for m, _ in monomials_of(G, Q)), default=0)
        start = default_window_start(G, A, k, deg)
        pool = [p for p in primes if p > start]
        passed = 0
        for p in pool:
            res = check_congruence(G, A, Q, p, k)
            if res.status == "inconclusive":
                inconclusive += 1
                continue
            if res.status == "fails":
                bad.append((G.dumps(), A, k, str(Q), p))
            payload.append(f"{G.dumps()}|{A}|{k}|{Q}|{p}|{res.status}")
            passed += 1
            if passed == 5:
                break
        if passed < 5:
            bad.append((G.dumps(), A, k, str(Q), "too few primes"))
        count += 1
    return Outcome(
        not bad, f"{count} instances at 5 primes each, {inconclusive} inconclusive re-sampled, {len(bad)} failures", payload
    )


def criterion_5(threads: int = 1, seed: int = 5) -> Outcome:
    rng = random.Random(seed)
    bad = []
    payload = []
    count = 0
    for g, n in [(0, 3), (0, 4), (0, 5), (0, 6), (1, 1), (1, 2), (1, 3), (2, 0), (2, 1), (2, 2), (2, 3)]:
        for G in enumerate_stable_graphs(g, n):
            seps = [e for e in G.edges if is_separating(G, e)]
            if not seps:
                continue
            for _ in range(10 if len(G.edges) <= 2 else 2):
                A = random_A_for(rng, G, 0)
                e = rng.choice(seps)
                Q = random_monomial(rng, G, 4)
                lhs = factor_separating(G, e, A, Q, threads=threads).value
                rhs = constant_term_S(G, A, Q, threads=threads).value
                if lhs != rhs:
                    bad.append((G.dumps(), e, A, str(Q)))
                payload.append(f"{G.dumps()}|{e}|{A}|{Q}|{lhs}")
                count += 1
    return Outcome(not bad, f"{count} factorizations, {len(bad)} mismatches", payload)


def criterion_6(threads: int = 1, seed: int = 6) -> Outcome:
    rng = random.Random(seed)
    bad = []
    payload = []
    count = 0
    for G in (banana_graph(), loop_bridge_graph()):
        for e in [e for e in G.edges if not is_separating(G, e)]:
            base = random_A_for(rng, G, 0)
            monos = [random_monomial(rng, G, 4) for _ in range(2)]
            h1, h2 = e
            monos.append(MultiPoly.var(xvar(h1)) ** 2 * MultiPoly.var(xvar(h2)))
            for Q in monos:
                for a in range(-5, 6):
                    sr = shift_recursion(G, e, base, a, Q)
                    direct = constant_term_S(sr.graph, list(sr.shifted_A), Q, threads=threads).value
                    if sr.result.value != direct:
                        bad.append((G.dumps(), e, base, str(Q), a))
                    payload.append(f"{G.dumps()}|{e}|{base}|{Q}|{a}|{sr.result.value}|{sr.psi}")
                    count += 1
    return Outcome(not bad, f"{count} shifted values, {len(bad)} mismatches", payload)


def criterion_7(threads: int = 1, seed: int = 7) -> Outcome:
    rng = random.Random(seed)
    bad = []
    payload = []
    count = 0
    graphs = [G for g, n in [(1, 1), (1, 2), (2, 1), (1, 3)] for G in enumerate_stable_graphs(g, n) if G.edges]
    for G in graphs:
        Q = random_monomial(rng, G, 3)
        for k in (-1, 0, 1, 2):
            Gp, _ = reduce_to_k0(G, random_A_for(rng, G, k), k)
            P = build_S_polynomial(Gp, Q)
            for _ in range(25):
                A = random_A_for(rng, G, k, spread=12)
                _, Ap = reduce_to_k0(G, A, k)
                via_poly = P.evaluate({avar(i + 1): a for i, a in enumerate(Ap)})
                direct = constant_term_S(G, A, Q, k, threads=threads).value
                if via_poly != direct:
                    bad.append((G.dumps(), str(Q), k, A))
                payload.append(f"{G.dumps()}|{Q}|{k}|{A}|{direct}")
                count += 1
    return Outcome(not bad, f"{count} lattice points over {len(graphs)} graphs, {len(bad)} mismatches", payload)


def criterion_8(threads: int = 1, seed: int = 8) -> Outcome:
    rng = random.Random(seed)
    bad = []
    payload = []
    for n in range(3, 7):
        for _ in range(5):
            A = random_A(rng, n, 0, spread=6)
            expr = dr_cycle(0, n, A, 0, threads=threads)
            terms = expr.terms()
            ok = len(terms) == 1 and not terms[0][0].graph.edges and terms[0][0].codim == 0 and terms[0][1] == 1
            if not ok:
                bad.append((n, A))
            payload.append(json.dumps(expr.to_json(), sort_keys=True))
    return Outcome(not bad, f"20 genus-0 cycles, {len(bad)} not equal to the fundamental class", payload)


def criterion_9(threads: int = 1) -> Outcome:
    bad = []
    payload = []
    cases = [(1, 1, [0], 0), (1, 1, [1], 1), (1, 1, [-2], -2), (1, 2, [3, -3], 0), (1, 2, [2, 0], 1), (1, 2, [5, -1], 2)]
    for g, n, A, k in cases:
        start = 2 * (sum(abs(a) for a in A) + 2 * abs(k) * (2 * g - 2 + n) + 2 * g) + 3
        primes = admissible_nodes(max(start, 50), 6, primes_only=True)
        lhs = dr_cycle(g, n, A, k, threads=threads)
        rhs = dr_cycle_interpolated(g, n, A, k, primes, threads=threads)
        if lhs != rhs or not lhs:
            bad.append((g, n, A, k))
        payload.append(json.dumps(lhs.to_json(), sort_keys=True))
    return Outcome(not bad, f"{len(cases)} cycles compared stratum by stratum, {len(bad)} mismatches", payload)


def criterion_10(threads: int = 1, seed: int = 10) -> Outcome:
    rng = random.Random(seed)
    problems = []
    fit = dr_polynomial(1, 2, method="fit", threads=threads)
    rec = dr_polynomial(1, 2, method="recursion", threads=threads)
    if fit.expression != rec.expression:
        problems.append("fit and recursion differ")
    if fit.max_degree() > 2:
        problems.append(f"degree {fit.max_degree()} > 2")
    design = {tuple(p) for p in fit.certificate["design"]} | {tuple(p) for p in fit.certificate["holdout"]}
    points = 0
    while points < 20:
        a1, k = rng.randint(-15, 15), rng.randint(-6, 6)
        if (a1, k) in design:
            continue
        A = [a1, 2 * k - a1]
        if fit.at(A) != dr_cycle(1, 2, A, k, threads=threads):
            problems.append(f"mismatch at {A}")
        swapped = dr_cycle(1, 2, A[::-1], k, threads=threads)
        if swapped != permute_legs(dr_cycle(1, 2, A, k, threads=threads), (1, 0)):
            problems.append(f"equivariance fails at {A}")
        points += 1
    payload = [json.dumps(fit.to_json(), sort_keys=True), json.dumps(rec.to_json()["lattice"], sort_keys=True)]
    return Outcome(not problems, "; ".join(problems) or "fit == recursion, degree <= 2, 20 fresh points agree", payload)


def criterion_12(threads: int = 1) -> Outcome:
    t = time.time()
    fit = dr_polynomial(2, 1, method="fit", threads=threads)
    rec = dr_polynomial(2, 1, method="recursion", threads=threads)
    elapsed = time.time() - t
    problems = []
    if fit.expression != rec.expression:
        problems.append("fit and recursion differ")
    for kk in (-3, 4, 7):
        if fit.at([3 * kk]) != dr_cycle(2, 1, [3 * kk], kk, threads=threads):
            problems.append(f"mismatch at k = {kk}")
    if elapsed > 1800:
        problems.append(f"took {elapsed:.0f} s")
    payload = [json.dumps(fit.to_json(), sort_keys=True)]
    detail = "; ".join(problems) or f"{len(fit.expression)} strata, degree {fit.max_degree()}, fit == recursion"
    return Outcome(not problems, detail, payload)


CRITERIA: Dict[int, Tuple[str, Callable[..., Outcome]]] = {
    1: ("loop closed form", criterion_1),
    2: ("brute-force equivalence", criterion_2),
    3: ("eventual polynomiality", criterion_3),
    4: ("congruence at primes", criterion_4),
    5: ("separating-edge factorization", criterion_5),
    6: ("shift recursion", criterion_6),
    7: ("polynomial in A after k-reduction", criterion_7),
    8: ("genus-0 cycle", criterion_8),
    9: ("r-consistency of the formula", criterion_9),
    10: ("fit vs recursion for (1,2)", criterion_10),
    12: ("scale target (2,1)", criterion_12),
}

QUICK = (1, 6, 8, 9, 10)


def run_criterion(number: int, threads: int = 1) -> Outcome:
    name, fn = CRITERIA[number]
    t = time.time()
    out = fn(threads)
    out.seconds = time.time() - t
    return out


def criterion_11(baseline: Optional[Dict[int, Outcome]] = None, threads: int = 8, numbers=range(1, 11)) -> Outcome:
    """Re-run criteria at another thread count; payloads must be identical."""
    baseline = dict(baseline or {})
    differing = []
    payload = []
    for i in numbers:
        if i not in baseline:
            baseline[i] = run_criterion(i, 1)
        other = run_criterion(i, threads)
        if other.digest() != baseline[i].digest():
            differing.append(i)
        payload.append(f"{i}:{baseline[i].digest()}")
    return Outcome(not differing, f"thread counts 1 and {threads}: differing criteria {differing}", payload)


def run_all(quick: bool = False, threads: int = 1, log: Optional[Callable[[str], None]] = None) -> List[dict]:
    numbers = QUICK if quick else tuple(range(1, 13))
    done: Dict[int, Outcome] = {}
    report = []
    for i in numbers:
        t = time.time()
        if i == 11:
            out = criterion_11({j: done[j] for j in done if j <= 10 and threads == 1}, 8)
            out.seconds = time.time() - t
        else:
            out = run_criterion(i, threads)
            done[i] = out
        name = "determinism across thread counts" if i == 11 else CRITERIA[i][0]
        row = {"criterion": i, "name": name, "ok": out.ok, "detail": out.detail, "seconds": round(out.seconds, 2)}
        report.append(row)
        if log:
            log(f"[{'PASS' if out.ok else 'FAIL'}] {i:2d} {name}: {out.detail} ({out.seconds:.1f} s)")
    return report
