import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from isoroute.graph import INF
from isoroute.isodijkstra import (
    IsochroneEdgeSet,
    QueryContext,
    brute_force_isochrone,
    full_distances,
    iso_dijkstra,
)

from conftest import random_strongly_connected


def test_tg1_distances(tg1):
    d = full_distances(tg1, 0)
    assert d.tolist() == [0, 2, 5, 9]


def test_tg1_tau5(tg1):
    res = iso_dijkstra(tg1, 0, 5)
    assert res.as_pairs(tg1) == {(3, 4, "in_out"), (4, 1, "out_in")}


def test_tg1_tau0(tg1):
    res = iso_dijkstra(tg1, 0, 0)
    assert res.as_pairs(tg1) == {
        (1, 2, "in_out"),
        (1, 3, "in_out"),
        (4, 1, "out_in"),
    }


def test_tg1_tau9_empty(tg1):
    assert len(iso_dijkstra(tg1, 0, 9)) == 0


def test_brute_force_matches_on_tg1(tg1):
    for s in range(4):
        for tau in range(11):
            assert iso_dijkstra(tg1, s, tau) == brute_force_isochrone(tg1, s, tau)


def test_all_in_range_empty(tg1):
    assert len(brute_force_isochrone(tg1, 0, int(INF) - 1)) == 0


def test_tg2_stale_label_case(tg2):
    # limit 4: (v,w)=(4,5) must NOT be reported; w is reachable within 4 via u
    res = brute_force_isochrone(tg2, 0, 4)
    pairs = res.as_pairs(tg2)
    assert (5, 6, "in_out") in pairs
    assert (6, 1, "out_in") in pairs
    assert not any(p[:2] == (4, 5) for p in pairs)
    assert iso_dijkstra(tg2, 0, 4) == res


def test_vertex_at_exact_tau_is_in_range(tg1):
    # d(2)=2: at tau=2 vertex 2 is in range (<=, not <)
    res = iso_dijkstra(tg1, 0, 2)
    d = full_distances(tg1, 0)
    assert d[1] == 2
    pairs = res.as_pairs(tg1)
    assert (2, 3, "in_out") in pairs


def test_monotone_range_growth(tg3):
    prev = None
    for tau in range(0, 12):
        d = full_distances(tg3, 0)
        cur = set(np.flatnonzero(d <= tau).tolist())
        if prev is not None:
            assert prev <= cur
        prev = cur


def test_context_reuse_and_settled(tg1):
    ctx = QueryContext(tg1)
    r1 = iso_dijkstra(tg1, 0, 5, ctx)
    s1 = ctx.last_settled
    r2 = iso_dijkstra(tg1, 0, 5, ctx)
    assert r1 == r2
    assert ctx.last_settled == s1
    assert s1 == 3  # vertices 1,2,3 in range
    # no INF-keyed vertex was ever settled
    assert not ctx.is_settled(3)


def test_serialization_lines(tg1):
    res = iso_dijkstra(tg1, 0, 5)
    assert res.to_lines(tg1) == ["3 4 in_out", "4 1 out_in"]


def test_hash_stable(tg1):
    a = iso_dijkstra(tg1, 0, 5).content_hash()
    b = brute_force_isochrone(tg1, 0, 5).content_hash()
    assert a == b
    c = iso_dijkstra(tg1, 0, 4).content_hash()
    assert a != c


def test_from_buffers_dedup_and_sort():
    s = IsochroneEdgeSet.from_buffers([5, 1, 5], [0, 1, 0])
    assert s.edge_ids.tolist() == [1, 5]


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 40), st.integers(0, 10**6))
def test_exhaustive_equivalence_random(n, seed):
    g = random_strongly_connected(n, 2 * n, seed)
    d0 = full_distances(g, 0)
    taus = sorted({0, 1, int(d0.max()), int(d0.max()) + 1,
                   int(np.median(d0)), int(d0.max() // 3)})
    ctx = QueryContext(g)
    for s in range(0, n, max(1, n // 5)):
        for tau in taus:
            assert iso_dijkstra(g, s, tau, ctx) == brute_force_isochrone(g, s, tau)
