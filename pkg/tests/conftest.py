from __future__ import annotations

import pytest

from drengine.exact import MultiPoly
from drengine.graphs import StableGraph
from drengine.weightsum import xvar


def X(*hs):
    p = MultiPoly.const(1)
    for h in hs:
        p = p * MultiPoly.var(xvar(h))
    return p


@pytest.fixture
def loop():
    # genus-0 vertex, one loop (halves 2, 3), one leg (1)
    return StableGraph.from_edges([0], [0], [(0, 0)])


@pytest.fixture
def banana():
    # legs 1, 2 on vertices 0, 1; edges (3, 4) and (5, 6)
    return StableGraph.from_edges([0, 0], [0, 1], [(0, 1), (0, 1)])


@pytest.fixture
def bridge():
    # genus-1 vertex 0 bridged to genus-0 vertex 1 carrying legs 1, 2; edge (3, 4)
    return StableGraph.from_edges([1, 0], [1, 1], [(0, 1)])


@pytest.fixture
def loop_bridge():
    # loop (3, 4) on vertex 0, bridge (5, 6) to vertex 1 with legs 1, 2
    return StableGraph.from_edges([0, 0], [1, 1], [(0, 0), (0, 1)])


@pytest.fixture
def smooth11():
    return StableGraph.from_edges([1], [0], [])
