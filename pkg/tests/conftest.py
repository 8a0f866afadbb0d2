"""Shared fixtures: the four canonical test graphs and random-graph helpers.

TG1  4-cycle plus chord (the running example in most modules).
TG2  the stale-label trap: a shortcut-length coincidence at the limit
     makes a naive search misreport (v, w).
TG3  two unit-weight 3-cycles joined by cross edges; used for overlay,
     eccentricity, and contraction examples.
TG3M "mountain": a cell with a fast tunnel between its boundary vertices
     and an interior summit beyond the limit.
"""

import numpy as np
import pytest

from isoroute.graph import Coordinates, RoadGraph, parse_dimacs_gr
from isoroute.partition import MultilevelPartition

TG1_GR = """p sp 4 5
a 1 2 2
a 2 3 3
a 3 4 4
a 4 1 1
a 1 3 10
"""

# Fig. 2 right: s,u,x,v,w,z = 1..6
TG2_GR = """p sp 6 7
a 1 2 2
a 2 3 1
a 3 4 1
a 2 5 2
a 4 5 1
a 5 6 5
a 6 1 1
"""

TG3_GR = """p sp 6 8
a 1 2 1
a 2 3 1
a 3 1 1
a 4 5 1
a 5 6 1
a 6 4 1
a 3 4 2
a 6 1 2
"""

# Fig. 2 left: s=1, p=2 (left boundary), m=3 (summit), q=4 (right boundary),
# r=5 (return).  Tunnel 2->4 is fast; the mountain road 2->3->4 is slow.
TG3M_GR = """p sp 5 6
a 1 2 1
a 2 4 2
a 2 3 10
a 3 4 10
a 4 5 1
a 5 1 1
"""


@pytest.fixture(scope="session")
def tg1():
    return parse_dimacs_gr(TG1_GR)


@pytest.fixture(scope="session")
def tg2():
    return parse_dimacs_gr(TG2_GR)


@pytest.fixture(scope="session")
def tg3():
    return parse_dimacs_gr(TG3_GR)


@pytest.fixture(scope="session")
def tg3m():
    return parse_dimacs_gr(TG3M_GR)


@pytest.fixture(scope="session")
def tg1_coords():
    # unit square, micro-degrees
    return Coordinates(
        lat_udeg=np.array([0, 0, 1000, 1000], dtype=np.int64),
        lon_udeg=np.array([0, 1000, 1000, 0], dtype=np.int64),
    )


def mlp_from_ids(*levels):
    """Build a MultilevelPartition from per-level cell-id lists (level 1 first)."""
    cells = np.array(levels, dtype=np.int32)
    return MultilevelPartition(cells=cells)


@pytest.fixture(scope="session")
def tg3_mlp():
    # level-1 cells {1,2,3} and {4,5,6}; single top-level cell
    return mlp_from_ids([0, 0, 0, 1, 1, 1], [0, 0, 0, 0, 0, 0])


@pytest.fixture(scope="session")
def tg3m_mlp():
    # mountain cell {2,3,4} = cell 0, outside {1,5} = cell 1
    return mlp_from_ids([1, 0, 0, 0, 1])


def random_strongly_connected(n, extra_edges, seed, max_w=20):
    """Random strongly connected digraph: a random cycle through all
    vertices plus `extra_edges` random arcs."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    tails = [order[i] for i in range(n)]
    heads = [order[(i + 1) % n] for i in range(n)]
    t2 = rng.integers(0, n, size=extra_edges)
    h2 = rng.integers(0, n, size=extra_edges)
    tails = np.concatenate([tails, t2])
    heads = np.concatenate([heads, h2])
    w = rng.integers(1, max_w + 1, size=tails.size)
    return RoadGraph.from_edges(n, tails, heads, w)


@pytest.fixture(scope="session")
def medium_graph():
    """A few thousand vertices: grid-like with random weights, strongly
    connected; big enough to exercise multilevel structure."""
    from isoroute.synth import synth_road_network

    graph, coords = synth_road_network(40, 40, seed=7, oneway_fraction=0.06)
    return graph, coords
