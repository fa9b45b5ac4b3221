"""Stable graphs: representation, validation, canonical forms,
automorphisms, enumeration of G_{g,n} and edge surgery.

Half-edges and vertices carry arbitrary integer ids. The root map of a
half-edge is called ``attach`` throughout, to keep ``r`` free for the
weighting modulus.
"""

from __future__ import annotations

import itertools
import json
from collections import Counter, deque
from dataclasses import dataclass
from functools import cached_property
from math import factorial
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .errors import DomainError, StructuralError

Edge = Tuple[int, int]


@dataclass(frozen=True)
class StableGraph:
    """Vertices ``(id, genus)``, half-edges, attachment, involution, legs.

    Construction only checks that the maps are total and consistent; the
    stability and genus conditions are checked by :func:`validate`, since
    cut graphs and intermediate objects may legitimately violate
    connectedness.
    """

    vertices: Tuple[Tuple[int, int], ...]
    half_edges: Tuple[int, ...]
    attach: Tuple[Tuple[int, int], ...]
    involution: Tuple[Tuple[int, int], ...]
    legs: Tuple[int, ...]

    def __post_init__(self):
        vids = [v for v, _ in self.vertices]
        if len(set(vids)) != len(vids):
            raise StructuralError("duplicate vertex id")
        if any(g < 0 for _, g in self.vertices):
            raise StructuralError("negative vertex genus")
        hs = set(self.half_edges)
        if len(hs) != len(self.half_edges):
            raise StructuralError("duplicate half-edge id")
        att = dict(self.attach)
        inv = dict(self.involution)
        if set(att) != hs or len(att) != len(self.attach):
            raise StructuralError("attach is not a total map on the half-edges")
        if not set(att.values()) <= set(vids):
            raise StructuralError("attach refers to an unknown vertex")
        if set(inv) != hs or len(inv) != len(self.involution):
            raise StructuralError("involution is not a total map on the half-edges")
        if not set(inv.values()) <= hs:
            raise StructuralError("involution refers to an unknown half-edge")
        if len(set(self.legs)) != len(self.legs) or not set(self.legs) <= hs:
            raise StructuralError("legs must be distinct half-edges")

    # construction -----------------------------------------------------
    @classmethod
    def build(
        cls,
        vertices: Sequence[Tuple[int, int]],
        attach: Mapping[int, int],
        involution: Mapping[int, int],
        legs: Sequence[int],
        half_edges: Optional[Sequence[int]] = None,
    ) -> "StableGraph":
        if half_edges is None:
            half_edges = list(attach)
        half_edges = tuple(int(h) for h in half_edges)
        try:
            att = tuple((h, int(attach[h])) for h in half_edges)
            inv = tuple((h, int(involution[h])) for h in half_edges)
        except KeyError as exc:
            raise StructuralError(f"half-edge {exc} missing from attach/involution") from exc
        return cls(
            tuple((int(v), int(g)) for v, g in vertices),
            half_edges,
            att,
            inv,
            tuple(int(h) for h in legs),
        )

    @classmethod
    def from_edges(
        cls, genera: Sequence[int], legs_at: Sequence[int], edges: Sequence[Tuple[int, int]]
    ) -> "StableGraph":
        """Graph on vertices ``0..len(genera)-1``.

        Leg ``i`` gets half-edge id ``i + 1`` at vertex ``legs_at[i]``;
        edge ``j = (u, v)`` gets half-edges ``n + 2j + 1`` at u and
        ``n + 2j + 2`` at v.
        """
        n = len(legs_at)
        attach = {}
        inv = {}
        for i, v in enumerate(legs_at):
            attach[i + 1] = v
            inv[i + 1] = i + 1
        for j, (u, v) in enumerate(edges):
            h, hp = n + 2 * j + 1, n + 2 * j + 2
            attach[h], attach[hp] = u, v
            inv[h], inv[hp] = hp, h
        return cls.build(list(enumerate(genera)), attach, inv, [i + 1 for i in range(n)])

    # basic accessors --------------------------------------------------
    @cached_property
    def attach_map(self) -> Dict[int, int]:
        return dict(self.attach)

    @cached_property
    def inv_map(self) -> Dict[int, int]:
        return dict(self.involution)

    @cached_property
    def genus_map(self) -> Dict[int, int]:
        return dict(self.vertices)

    @property
    def vertex_ids(self) -> Tuple[int, ...]:
        return tuple(v for v, _ in self.vertices)

    @property
    def n_legs(self) -> int:
        return len(self.legs)

    @cached_property
    def leg_index(self) -> Dict[int, int]:
        """Half-edge id -> 0-based leg position."""
        return {h: i for i, h in enumerate(self.legs)}

    @cached_property
    def edges(self) -> Tuple[Edge, ...]:
        """Edges as ``(h, h')`` with ``h`` earlier in ``half_edges``."""
        seen = set()
        out = []
        inv = self.inv_map
        for h in self.half_edges:
            hp = inv[h]
            if hp != h and h not in seen:
                seen.update((h, hp))
                out.append((h, hp))
        return tuple(out)

    @cached_property
    def nonleg_half_edges(self) -> Tuple[int, ...]:
        legs = set(self.legs)
        return tuple(h for h in self.half_edges if h not in legs)

    @cached_property
    def half_edges_at(self) -> Dict[int, Tuple[int, ...]]:
        out: Dict[int, List[int]] = {v: [] for v in self.vertex_ids}
        for h, v in self.attach:
            out[v].append(h)
        return {v: tuple(hs) for v, hs in out.items()}

    def valence(self, v: int) -> int:
        return len(self.half_edges_at[v])

    @cached_property
    def components(self) -> Tuple[Tuple[int, ...], ...]:
        """Vertex sets of connected components, in vertex order."""
        adj: Dict[int, set] = {v: set() for v in self.vertex_ids}
        att = self.attach_map
        for h, hp in self.edges:
            adj[att[h]].add(att[hp])
            adj[att[hp]].add(att[h])
        seen = set()
        comps = []
        for v in self.vertex_ids:
            if v in seen:
                continue
            comp = []
            queue = deque([v])
            seen.add(v)
            while queue:
                u = queue.popleft()
                comp.append(u)
                for w in sorted(adj[u]):
                    if w not in seen:
                        seen.add(w)
                        queue.append(w)
            order = {x: i for i, x in enumerate(self.vertex_ids)}
            comps.append(tuple(sorted(comp, key=order.__getitem__)))
        return tuple(comps)

    def is_connected(self) -> bool:
        return len(self.components) == 1

    @property
    def h1(self) -> int:
        return len(self.edges) - len(self.vertices) + len(self.components)

    @property
    def genus(self) -> int:
        """Sum of vertex genera plus h1; for disconnected graphs the sum over components."""
        return sum(g for _, g in self.vertices) + self.h1

    # serialization ----------------------------------------------------
    def to_json(self) -> dict:
        return {
            "genus": self.genus,
            "vertices": [{"id": v, "genus": g} for v, g in self.vertices],
            "half_edges": list(self.half_edges),
            "attach": {str(h): v for h, v in self.attach},
            "involution": {str(h): hp for h, hp in self.involution},
            "legs": list(self.legs),
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "StableGraph":
        try:
            vertices = [(int(v["id"]), int(v["genus"])) for v in doc["vertices"]]
            half_edges = [int(h) for h in doc["half_edges"]]
            attach = {int(h): int(v) for h, v in doc["attach"].items()}
            inv = {int(h): int(hp) for h, hp in doc["involution"].items()}
            legs = [int(h) for h in doc["legs"]]
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise StructuralError(f"malformed graph JSON: {exc}") from exc
        graph = cls.build(vertices, attach, inv, legs, half_edges)
        if "genus" in doc and int(doc["genus"]) != graph.genus:
            raise StructuralError(f"declared genus {doc['genus']} differs from computed {graph.genus}")
        return graph

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=False, separators=(",", ":"))


# validation -----------------------------------------------------------


@dataclass(frozen=True)
class Validation:
    ok: bool
    clause: Optional[str] = None
    message: str = ""

    def __bool__(self) -> bool:
        return self.ok


def validate(candidate: StableGraph, g: int, n: int, *, require_connected: bool = True) -> Validation:
    """Check the stable-graph invariants for ambient ``(g, n)``.

    The diagnostics name the first violated clause.
    """
    if not isinstance(candidate, StableGraph):
        raise StructuralError("candidate is not a StableGraph")
    inv = candidate.inv_map
    for h, hp in inv.items():
        if inv[hp] != h:
            return Validation(False, "involution", f"involution is not self-inverse at half-edge {h}")
    fixed = {h for h, hp in inv.items() if h == hp}
    if fixed != set(candidate.legs):
        return Validation(False, "legs", "fixed points of the involution differ from the legs")
    if len(candidate.legs) != n:
        return Validation(False, "legs", f"graph has {len(candidate.legs)} legs, expected {n}")
    if require_connected and not candidate.is_connected():
        return Validation(False, "connected", "graph is not connected")
    for v, gv in candidate.vertices:
        if 2 * gv - 2 + candidate.valence(v) <= 0:
            return Validation(
                False, "stability", f"vertex {v}: 2*{gv} - 2 + {candidate.valence(v)} <= 0"
            )
    if candidate.genus != g:
        return Validation(False, "genus", f"genus {candidate.genus} differs from {g}")
    return Validation(True)


# canonical forms ------------------------------------------------------


def _decor(psi, kappa):
    return (psi or {}), (kappa or {})


def _refine(graph: StableGraph, psi, kappa) -> Dict[int, int]:
    """Isomorphism-invariant vertex colours by iterated neighbourhood refinement."""
    att = graph.attach_map
    inv = graph.inv_map
    leg_at: Dict[int, List[Tuple[int, int]]] = {v: [] for v in graph.vertex_ids}
    for i, h in enumerate(graph.legs):
        leg_at[att[h]].append((i, psi.get(h, 0)))
    base = {
        v: (graph.genus_map[v], kappa.get(v, 0), graph.valence(v), tuple(sorted(leg_at[v])))
        for v in graph.vertex_ids
    }
    colour = _relabel_colours(base)
    while True:
        sig = {}
        for v in graph.vertex_ids:
            nb = []
            for h in graph.half_edges_at[v]:
                hp = inv[h]
                if hp != h:
                    nb.append((psi.get(h, 0), psi.get(hp, 0), colour[att[hp]]))
            sig[v] = (colour[v], tuple(sorted(nb)))
        new = _relabel_colours(sig)
        if len(set(new.values())) == len(set(colour.values())):
            return new
        colour = new


def _relabel_colours(sig: Mapping[int, tuple]) -> Dict[int, int]:
    ranks = {s: i for i, s in enumerate(sorted(set(sig.values())))}
    return {v: ranks[s] for v, s in sig.items()}


def _encode(graph: StableGraph, order: Sequence[int], psi, kappa):
    pos = {v: i for i, v in enumerate(order)}
    att = graph.attach_map
    vpart = tuple((graph.genus_map[v], kappa.get(v, 0)) for v in order)
    lpart = tuple((pos[att[h]], psi.get(h, 0)) for h in graph.legs)
    epart = []
    for h, hp in graph.edges:
        s1 = (pos[att[h]], psi.get(h, 0))
        s2 = (pos[att[hp]], psi.get(hp, 0))
        epart.append((s1, s2) if s1 <= s2 else (s2, s1))
    return (len(order), vpart, lpart, tuple(sorted(epart)))


def _candidate_orders(graph: StableGraph, psi, kappa) -> Iterable[Tuple[int, ...]]:
    colour = _refine(graph, psi, kappa)
    classes: Dict[int, List[int]] = {}
    for v in graph.vertex_ids:
        classes.setdefault(colour[v], []).append(v)
    groups = [classes[c] for c in sorted(classes)]
    for perms in itertools.product(*(itertools.permutations(gr) for gr in groups)):
        yield tuple(v for p in perms for v in p)


def _best_orders(graph: StableGraph, psi, kappa):
    best = None
    best_orders = []
    for order in _candidate_orders(graph, psi, kappa):
        enc = _encode(graph, order, psi, kappa)
        if best is None or enc < best:
            best = enc
            best_orders = [order]
        elif enc == best:
            best_orders.append(order)
    return best, best_orders


def _serialize(enc) -> bytes:
    nv, vpart, lpart, epart = enc
    out = [nv, len(lpart), len(epart)]
    for g, k in vpart:
        out += [g, k]
    for p, s in lpart:
        out += [p, s]
    for (p1, s1), (p2, s2) in epart:
        out += [p1, s1, p2, s2]
    return b"".join(x.to_bytes(2, "big") for x in out)


@dataclass(frozen=True)
class CanonicalForm:
    encoding: bytes
    vertex_map: Dict[int, int]
    half_edge_map: Dict[int, int]

    @property
    def hex(self) -> str:
        return self.encoding.hex()


def canonical_form(
    graph: StableGraph,
    psi: Optional[Mapping[int, int]] = None,
    kappa: Optional[Mapping[int, int]] = None,
) -> CanonicalForm:
    """Leg-fixing canonical encoding of a (decorated) graph.

    The encoding is the lexicographic minimum over vertex orderings
    compatible with refined vertex colours. The relabeling maps send the
    graph onto :func:`canonical_graph`'s output: vertices to ``0..m-1``,
    leg ``i`` to half-edge ``i + 1``, the ``j``-th sorted edge to
    ``n + 2j + 1`` and ``n + 2j + 2``.
    """
    psi, kappa = _decor(psi, kappa)
    enc, orders = _best_orders(graph, psi, kappa)
    order = orders[0]
    pos = {v: i for i, v in enumerate(order)}
    att = graph.attach_map
    n = graph.n_legs
    hmap = {h: i + 1 for i, h in enumerate(graph.legs)}
    pool: Dict[tuple, List[Tuple[int, int]]] = {}
    for h, hp in graph.edges:
        s1 = (pos[att[h]], psi.get(h, 0))
        s2 = (pos[att[hp]], psi.get(hp, 0))
        key = (s1, s2) if s1 <= s2 else (s2, s1)
        pool.setdefault(key, []).append((h, hp) if s1 <= s2 else (hp, h))
    for j, key in enumerate(enc[3]):
        h, hp = pool[key].pop(0)
        hmap[h] = n + 2 * j + 1
        hmap[hp] = n + 2 * j + 2
    return CanonicalForm(_serialize(enc), pos, hmap)


def canonical_graph(
    graph: StableGraph,
    psi: Optional[Mapping[int, int]] = None,
    kappa: Optional[Mapping[int, int]] = None,
):
    """Relabel onto the canonical representative.

    Returns ``(graph', psi', kappa', form)`` with decorations transported.
    """
    form = canonical_form(graph, psi, kappa)
    vm, hm = form.vertex_map, form.half_edge_map
    psi, kappa = _decor(psi, kappa)
    vertices = sorted((vm[v], g) for v, g in graph.vertices)
    attach = {hm[h]: vm[v] for h, v in graph.attach}
    inv = {hm[h]: hm[hp] for h, hp in graph.involution}
    new = StableGraph.build(vertices, attach, inv, [hm[h] for h in graph.legs], sorted(attach))
    new_psi = {hm[h]: e for h, e in psi.items() if e}
    new_kappa = {vm[v]: e for v, e in kappa.items() if e}
    return new, new_psi, new_kappa, form


def are_isomorphic(g1: StableGraph, g2: StableGraph) -> bool:
    return canonical_form(g1).encoding == canonical_form(g2).encoding


def automorphism_count(
    graph: StableGraph,
    psi: Optional[Mapping[int, int]] = None,
    kappa: Optional[Mapping[int, int]] = None,
) -> int:
    """Order of the leg-fixing automorphism group (decorations preserved).

    Vertex automorphisms times, per class of parallel edges with equal
    decorations, ``m!`` edge permutations and a factor 2 for each loop
    whose two halves are interchangeable.
    """
    psi, kappa = _decor(psi, kappa)
    enc, orders = _best_orders(graph, psi, kappa)
    count = len(orders)
    for key, mult in Counter(enc[3]).items():
        count *= factorial(mult)
        if key[0] == key[1]:
            count *= 2**mult
    return count


# surgery --------------------------------------------------------------


def _check_edge(graph: StableGraph, e: Edge):
    h, hp = e
    inv = graph.inv_map
    if h not in inv or hp not in inv or inv[h] != hp or h == hp:
        raise DomainError(f"{e} is not an edge of the graph")


def cut_edge(graph: StableGraph, e: Edge) -> StableGraph:
    """Remove edge ``e = (h1, h2)``; h1 becomes leg n+1, h2 leg n+2."""
    _check_edge(graph, e)
    h1, h2 = e
    inv = dict(graph.inv_map)
    inv[h1] = h1
    inv[h2] = h2
    return StableGraph.build(
        graph.vertices, graph.attach_map, inv, list(graph.legs) + [h1, h2], graph.half_edges
    )


def is_separating(graph: StableGraph, e: Edge) -> bool:
    return len(cut_edge(graph, e).components) > len(graph.components)


def subgraph(graph: StableGraph, vertices: Sequence[int]) -> Tuple[StableGraph, List[int]]:
    """Induced graph on a union of components.

    Returns the graph and, for each of its legs, the position of that leg
    in ``graph.legs``.
    """
    vs = set(vertices)
    att = graph.attach_map
    hs = [h for h in graph.half_edges if att[h] in vs]
    hset = set(hs)
    if any(graph.inv_map[h] not in hset for h in hs):
        raise DomainError("vertex set is not a union of components")
    leg_pos = [i for i, h in enumerate(graph.legs) if h in hset]
    sub = StableGraph.build(
        [(v, g) for v, g in graph.vertices if v in vs],
        {h: att[h] for h in hs},
        {h: graph.inv_map[h] for h in hs},
        [graph.legs[i] for i in leg_pos],
        hs,
    )
    return sub, leg_pos


def add_legs(graph: StableGraph, at: Sequence[int]) -> StableGraph:
    """Append one new leg at each listed vertex (fresh half-edge ids)."""
    nxt = max(graph.half_edges, default=0) + 1
    attach = dict(graph.attach_map)
    inv = dict(graph.inv_map)
    legs = list(graph.legs)
    hes = list(graph.half_edges)
    for v in at:
        if v not in graph.genus_map:
            raise DomainError(f"unknown vertex {v}")
        attach[nxt] = v
        inv[nxt] = nxt
        legs.append(nxt)
        hes.append(nxt)
        nxt += 1
    return StableGraph.build(graph.vertices, attach, inv, legs, hes)


def spanning_tree(graph: StableGraph) -> Tuple[Tuple[Edge, ...], Tuple[int, ...]]:
    """Breadth-first spanning tree and a vertex order whose prefixes span subtrees.

    Returns ``(tree_edges, order)``; ``tree_edges[i]`` joins ``order[i+1]``
    to an earlier vertex and is oriented with that earlier vertex's
    half-edge first.
    """
    if not graph.is_connected():
        raise DomainError("spanning tree needs a connected graph")
    att = graph.attach_map
    inv = graph.inv_map
    root = graph.vertex_ids[0]
    order = [root]
    seen = {root}
    tree = []
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for h in graph.half_edges_at[v]:
            hp = inv[h]
            if hp == h:
                continue
            w = att[hp]
            if w not in seen:
                seen.add(w)
                order.append(w)
                tree.append((h, hp))
                queue.append(w)
    return tuple(tree), tuple(order)


# enumeration ----------------------------------------------------------


def _degenerations(graph: StableGraph) -> Iterable[StableGraph]:
    att = graph.attach_map
    inv = graph.inv_map
    nxt_h = max(graph.half_edges, default=0) + 1
    nxt_v = max(graph.vertex_ids) + 1
    for v, gv in graph.vertices:
        if gv >= 1:
            vertices = [(u, gu - 1 if u == v else gu) for u, gu in graph.vertices]
            attach = dict(att)
            inv2 = dict(inv)
            attach[nxt_h] = attach[nxt_h + 1] = v
            inv2[nxt_h], inv2[nxt_h + 1] = nxt_h + 1, nxt_h
            yield StableGraph.build(vertices, attach, inv2, graph.legs)
        hs = graph.half_edges_at[v]
        for g1 in range(gv + 1):
            g2 = gv - g1
            for mask in range(1 << len(hs)):
                side1 = [h for i, h in enumerate(hs) if mask >> i & 1]
                k1 = len(side1)
                k2 = len(hs) - k1
                if 2 * g1 - 1 + k1 <= 0 or 2 * g2 - 1 + k2 <= 0:
                    continue
                vertices = [(u, g1 if u == v else gu) for u, gu in graph.vertices] + [(nxt_v, g2)]
                attach = dict(att)
                for h in hs:
                    if h not in side1:
                        attach[h] = nxt_v
                inv2 = dict(inv)
                attach[nxt_h], attach[nxt_h + 1] = v, nxt_v
                inv2[nxt_h], inv2[nxt_h + 1] = nxt_h + 1, nxt_h
                yield StableGraph.build(vertices, attach, inv2, graph.legs)


def _smooth(g: int, n: int) -> StableGraph:
    return StableGraph.from_edges([g], [0] * n, [])


def enumerate_stable_graphs(g: int, n: int) -> List[StableGraph]:
    """One canonical representative per isomorphism class of G_{g,n}.

    Sorted by number of edges, then canonical encoding.
    """
    if g < 0 or n < 0 or 2 * g - 2 + n <= 0:
        raise DomainError(f"(g, n) = ({g}, {n}) is unstable")
    return list(_enumerate_cached(g, n))


_ENUM_CACHE: Dict[Tuple[int, int], Tuple[StableGraph, ...]] = {}


def _enumerate_cached(g: int, n: int) -> Tuple[StableGraph, ...]:
    if (g, n) in _ENUM_CACHE:
        return _ENUM_CACHE[(g, n)]
    start = canonical_graph(_smooth(g, n))[0]
    found = {canonical_form(start).encoding: start}
    layer = [start]
    while layer:
        nxt = {}
        for graph in layer:
            for child in _degenerations(graph):
                enc = canonical_form(child).encoding
                if enc not in found and enc not in nxt:
                    nxt[enc] = canonical_graph(child)[0]
        found.update(nxt)
        layer = list(nxt.values())
    out = tuple(sorted(found.values(), key=lambda G: (len(G.edges), canonical_form(G).encoding)))
    _ENUM_CACHE[(g, n)] = out
    return out
