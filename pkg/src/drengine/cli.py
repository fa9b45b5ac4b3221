"""Batch command-line interface.

Exit status: 0 success, 2 domain error, 3 certification failure,
1 anything else. Documents go to stdout (or ``--out``) as JSON;
diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional, Sequence

from .errors import CertificationError, DomainError
from .exact import MultiPoly, parse_poly
from .graphs import StableGraph, automorphism_count, canonical_form, enumerate_stable_graphs
from .pixton import dr_cycle, dr_polynomial
from .weightsum import (
    RamVector,
    avar,
    build_S_polynomial,
    constant_term_S,
    sum_S,
    to_zero_sum_coordinates,
    twisted_S_polynomial,
)

COMMANDS = ("graphs", "sum", "ct", "spoly", "dr", "drpoly", "selftest")


def _int_list(text: str) -> List[int]:
    text = text.strip()
    if not text:
        return []
    try:
        return [int(x) for x in text.replace("−", "-").split(",")]
    except ValueError as exc:
        raise DomainError(f"cannot read integer list {text!r}") from exc


def _load_json(text: str):
    if text.lstrip().startswith("{"):
        return json.loads(text)
    with open(text) as fh:
        return json.load(fh)


def _load_graph(text: str) -> StableGraph:
    try:
        return StableGraph.from_json(_load_json(text))
    except (OSError, json.JSONDecodeError) as exc:
        raise DomainError(f"cannot read graph {text!r}: {exc}") from exc


def _read_Q(value) -> MultiPoly:
    if value is None:
        return MultiPoly.const(1)
    if isinstance(value, dict):
        return MultiPoly.from_json(value)
    return parse_poly(str(value))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="drengine", description="Exact weighting sums and Pixton's formula.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--g", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--A", help="comma-separated leg values; write --A=-1,1 for a leading minus")
    p.add_argument("--r", help="modulus, or 'ct' for the constant term")
    p.add_argument("--Q", help="polynomial in x_<half-edge id>, e.g. 'x_2*x_3^2 + 1'")
    p.add_argument("--graph", help="graph JSON file or inline JSON")
    p.add_argument("--request", help="request JSON file or inline JSON (graph, A, k, r, Q)")
    p.add_argument("--method", choices=("fit", "recursion"), default="fit")
    p.add_argument("--max-degree", type=int, dest="max_degree")
    p.add_argument("--window-start", type=int, dest="window_start")
    p.add_argument("--threads", type=int)
    p.add_argument("--out")
    p.add_argument("--quick", action="store_true")
    return p


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise DomainError(f"{args.command} needs " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _sum_inputs(args):
    if args.request:
        req = _load_json(args.request)
        try:
            graph = StableGraph.from_json(req["graph"])
        except KeyError as exc:
            raise DomainError("request lacks 'graph'") from exc
        A = [int(a) for a in req.get("A", [])]
        k = int(req.get("k", 0))
        r = req.get("r", "ct")
        Q = _read_Q(req.get("Q"))
    else:
        _need(args, "graph")
        graph = _load_graph(args.graph)
        A = _int_list(args.A or "")
        k = args.k or 0
        r = args.r
        Q = _read_Q(args.Q)
    return graph, A, k, r, Q


def _cmd_graphs(args, threads):
    _need(args, "g", "n")
    graphs = enumerate_stable_graphs(args.g, args.n)
    return {
        "g": args.g,
        "n": args.n,
        "count": len(graphs),
        "graphs": [
            {"canonical": canonical_form(G).hex, "automorphisms": automorphism_count(G), "graph": G.to_json()}
            for G in graphs
        ],
    }


def _cmd_sum(args, threads, force_ct=False):
    graph, A, k, r, Q = _sum_inputs(args)
    if force_ct or r is None or str(r) == "ct":
        res = constant_term_S(graph, A, Q, k, start=args.window_start, threads=threads)
    else:
        try:
            r = int(r)
        except ValueError as exc:
            raise DomainError(f"--r must be an integer or 'ct', got {r!r}") from exc
        res = sum_S(graph, A, r, Q, k, threads=threads)
    return res.to_json()


def _cmd_spoly(args, threads):
    graph, A, k, _, Q = _sum_inputs(args)
    n = graph.n_legs
    twisted = twisted_S_polynomial(graph, Q)
    ambient_vars = [avar(i + 1) for i in range(n)]
    doc = {
        "graph": graph.to_json(),
        "Q": str(Q),
        "twisted": {
            "variables": ambient_vars + ["k"],
            "constraint": f"sum(A) = k*{2 * graph.genus - 2 + n}",
            "polynomial": twisted.to_json(ambient_vars + ["k"]),
        },
    }
    if args.k is None or args.k == 0:
        P = build_S_polynomial(graph, Q)
        doc["k0"] = {
            "ambient_representative": P.to_json(ambient_vars),
            "constraint": "sum(A) = 0",
            "lattice": to_zero_sum_coordinates(P, n).to_json(ambient_vars[:-1]),
        }
    if A:
        doc["value_at_A"] = {
            "A": A,
            "k": k,
            "value": str(twisted.evaluate(dict(zip(ambient_vars + ["k"], A + [k])))),
        }
    return doc


def _cmd_dr(args, threads):
    _need(args, "g", "n")
    A = _int_list(args.A or "")
    d = 2 * args.g - 2 + args.n
    k = args.k
    if k is None:
        if d == 0 or sum(A) % d:
            raise DomainError("give --k, or A with sum divisible by 2g-2+n")
        k = sum(A) // d
    RamVector(tuple(A), k, args.g, args.n)
    return dr_cycle(args.g, args.n, A, k, threads=threads).to_json()


def _cmd_drpoly(args, threads):
    _need(args, "g", "n")
    res = dr_polynomial(args.g, args.n, args.k, args.method, max_degree=args.max_degree, threads=threads)
    return res.to_json()


def _cmd_selftest(args, threads):
    from .selftest import run_all

    report = run_all(quick=args.quick, threads=threads, log=lambda s: print(s, file=sys.stderr, flush=True))
    return {"quick": args.quick, "all_passed": all(r["ok"] for r in report), "criteria": report}


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("DRENGINE_THREADS", "1") or 1)
    threads = max(1, threads)
    try:
        handler = {
            "graphs": _cmd_graphs,
            "sum": _cmd_sum,
            "ct": lambda a, t: _cmd_sum(a, t, force_ct=True),
            "spoly": _cmd_spoly,
            "dr": _cmd_dr,
            "drpoly": _cmd_drpoly,
            "selftest": _cmd_selftest,
        }[args.command]
        doc = handler(args, threads)
    except CertificationError as exc:
        print(f"certification failure: {exc}", file=sys.stderr)
        return 3
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.command == "selftest" and not doc["all_passed"]:
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
