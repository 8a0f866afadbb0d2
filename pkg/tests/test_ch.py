import numpy as np
import pytest

from isoroute.ch import (
    build_ch,
    ch_distance,
    contract,
    forward_upward_search,
    phast_one_to_all,
    phast_sweep,
    rphast_select,
    rphast_sweep,
)
from isoroute.graph import parse_dimacs_gr
from isoroute.isodijkstra import full_distances

from conftest import random_strongly_connected


def test_keep_all_means_no_contraction(tg1):
    rank, level, sct, sch, scw, core = contract(tg1, keep=np.arange(4))
    assert sct.size == 0
    assert core.tails.size == tg1.m
    assert (rank == -1).all()


def test_full_ch_query_tg1(tg1):
    ch = build_ch(tg1)
    assert ch_distance(ch, 0, 3) == 9
    assert sorted(ch.rank.tolist()) == [0, 1, 2, 3]


def test_chain_contraction_forced_shortcut():
    g = parse_dimacs_gr("p sp 3 3\na 1 2 4\na 2 3 5\na 3 1 1\n")
    rank, level, sct, sch, scw, core = contract(g, keep=np.array([0, 2]))
    assert list(zip(sct.tolist(), sch.tolist(), scw.tolist())) == [(0, 2, 9)]
    assert rank[1] == 0 and rank[0] == -1


def test_witness_avoids_unneeded_shortcut():
    # contracting 2 on 1->2->3 with a parallel cheaper 1->3 path needs none
    g = parse_dimacs_gr("p sp 3 4\na 1 2 4\na 2 3 5\na 1 3 2\na 3 1 1\n")
    _, _, sct, _, _, _ = contract(g, keep=np.array([0, 2]))
    assert sct.size == 0


def test_phast_full_sweep_tg1(tg1):
    ch = build_ch(tg1)
    assert phast_one_to_all(ch, 0).tolist() == [0, 2, 5, 9]


def test_sweep_idempotent(tg1):
    ch = build_ch(tg1)
    ctx = forward_upward_search(ch, [0])
    phast_sweep(ch, ctx)
    labels1 = [ctx.label(v) for v in range(4)]
    phast_sweep(ch, ctx)
    assert [ctx.label(v) for v in range(4)] == labels1


def test_level_order_is_topological(medium_graph):
    graph, _ = medium_graph
    ch = build_ch(graph)
    # every downward edge goes from an earlier sweep position to a later one
    for pos in range(graph.n):
        for i in range(ch.dn_start[pos], ch.dn_start[pos + 1]):
            assert ch.dn_pos[ch.dn_tail[i]] < pos


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_random_ch_distances(seed):
    n = 60 + 40 * seed
    g = random_strongly_connected(n, 3 * n, seed)
    ch = build_ch(g)
    rng = np.random.default_rng(seed)
    for _ in range(60):
        s, t = rng.integers(0, n, 2)
        assert ch_distance(ch, int(s), int(t)) == int(full_distances(g, int(s))[t])


@pytest.mark.parametrize("seed", [3, 4])
def test_random_phast_one_to_all(seed):
    n = 80
    g = random_strongly_connected(n, 3 * n, seed)
    ch = build_ch(g)
    rng = np.random.default_rng(seed)
    for s in rng.integers(0, n, 8):
        assert np.array_equal(phast_one_to_all(ch, int(s)),
                              full_distances(g, int(s)))


def test_multi_source_is_min_of_singles():
    g = random_strongly_connected(70, 200, 9)
    ch = build_ch(g)
    ctx = forward_upward_search(ch, [3, 40])
    phast_sweep(ch, ctx)
    want = np.minimum(full_distances(g, 3), full_distances(g, 40))
    got = np.array([ctx.label(v) for v in range(70)])
    assert np.array_equal(got, want)


def test_stop_at_zero_settles_only_sources():
    g = random_strongly_connected(30, 60, 2, max_w=9)
    ch = build_ch(g)
    ctx = forward_upward_search(ch, [5], stop_at=0)
    settled_like = [v for v in range(30) if ctx.label(v) == 0]
    assert settled_like == [5]


def test_rphast_selection_and_query():
    g = random_strongly_connected(90, 260, 12)
    ch = build_ch(g)
    rng = np.random.default_rng(12)
    targets = rng.choice(90, size=10, replace=False)
    sg = rphast_select(ch, targets)
    # closure property: every tail of a selected vertex is selected
    sel = set(sg.heads.tolist())
    for i, h in enumerate(sg.heads):
        for j in range(sg.start[i], sg.start[i + 1]):
            assert int(sg.tail[j]) in sel
    s = int(rng.integers(0, 90))
    ctx = forward_upward_search(ch, [s])
    rphast_sweep(sg, ctx)
    d = full_distances(g, s)
    for t in targets:
        assert ctx.label(int(t)) == int(d[t])


def test_rphast_trivial_cases():
    g = random_strongly_connected(40, 100, 7)
    ch = build_ch(g)
    top = int(np.argmax(ch.rank))
    sg = rphast_select(ch, [top])
    assert sg.vertex_count == 1 and sg.tail.size == 0
    sg_all = rphast_select(ch, np.arange(40))
    assert sg_all.tail.size == ch.dn_tail.size
    with pytest.raises(ValueError):
        rphast_select(ch, [])
