import numpy as np
import pytest

from isoroute.graph import INF, parse_dimacs_gr
from isoroute.isodijkstra import brute_force_isochrone, full_distances
from isoroute.isophast import (
    CdEngine,
    CpEngine,
    DtEngine,
    compute_boundary_diameter,
    compute_core_ecc,
    prepro_cp,
    prepro_dt,
    prepro_generic,
)
from isoroute.partition import (
    MultilevelPartition,
    derive_edge_partition,
    single_level_partition,
)


TG3_CELLS = np.array([0, 0, 0, 1, 1, 1], dtype=np.int32)


@pytest.fixture(scope="module")
def tg3_base(tg3):
    base = prepro_generic(tg3, TG3_CELLS)
    compute_core_ecc(base)
    return base


@pytest.fixture(scope="module")
def tg3_edge_base(tg3):
    mlp = MultilevelPartition(cells=TG3_CELLS.reshape(1, -1))
    ep = derive_edge_partition(tg3, mlp, 1)
    return prepro_generic(tg3, ep)


@pytest.fixture(scope="module")
def medium_setup(medium_graph):
    graph, coords = medium_graph
    cells = single_level_partition(graph, coords, 12)
    base = prepro_generic(graph, cells)
    compute_core_ecc(base)
    mlp = MultilevelPartition(cells=cells.reshape(1, -1))
    ep = derive_edge_partition(graph, mlp, 1)
    base_e = prepro_generic(graph, ep)
    return graph, base, base_e


def test_prepro_tg3_structure(tg3_base):
    base = tg3_base
    core_orig = sorted(base.perm.inverse[np.flatnonzero(base.is_core)].tolist())
    assert core_orig == [0, 2, 3, 5]
    # interiors {2} and {5} grouped by cell
    assert base.perm.inverse[base.iverts].tolist() == [1, 4]
    # every original edge appears exactly once as a real or dummy entry,
    # or as a core-to-core upward edge
    core_up = int(base.up_emit.sum())
    entry_orig = int((base.ie_eid >= 0).sum())
    assert core_up + entry_orig == base.graph.m


def test_core_ecc_tg3(tg3_base):
    ecc = tg3_base.ecc[tg3_base.perm.new_id_of]
    assert ecc[0] == 2 and ecc[2] == 2
    assert ecc[3] == 2 and ecc[5] == 2


def test_cell_without_interior():
    # cells of size one: every vertex is core, ecc is the restricted core
    # eccentricity (0 for a lone boundary vertex with no interior)
    g = parse_dimacs_gr("p sp 2 2\na 1 2 3\na 2 1 4\n")
    base = prepro_generic(g, np.array([0, 1], dtype=np.int32))
    compute_core_ecc(base)
    ecc = base.ecc[base.perm.new_id_of]
    assert ecc[0] == 0 and ecc[1] == 0


def test_unreachable_interior_gives_inf():
    # interior 2 of cell {1,2,3} is unreachable inside the cell from 3
    g = parse_dimacs_gr(
        "p sp 4 5\na 1 2 1\na 2 3 1\na 3 4 1\na 4 1 1\na 4 3 1\n"
    )
    base = prepro_generic(g, np.array([0, 0, 0, 1], dtype=np.int32))
    compute_core_ecc(base)
    ecc = base.ecc[base.perm.new_id_of]
    assert ecc[2] >= INF  # vertex 3 cannot reach interior 2 in-cell
    assert ecc[0] == 2


def exhaustive(engine, g, taus=None, threads=(1,)):
    dmax = max(int(full_distances(g, s).max()) for s in range(g.n))
    taus = taus if taus is not None else range(0, dmax + 2)
    for s in range(g.n):
        for tau in taus:
            want = brute_force_isochrone(g, s, int(tau))
            for th in threads:
                got = engine.query(s, int(tau), threads=th).edges
                assert got == want, (engine.name, s, tau, th)


def test_cd_exhaustive_tg3(tg3, tg3_base):
    exhaustive(CdEngine(tg3_base), tg3)


def test_cd_core_not_reached_special_case(tg3, tg3_base):
    eng = CdEngine(tg3_base)
    # from interior 2 (vertex id 1) with tau 0, the core is not reached
    res = eng.query(1, 0)
    assert res.stats.active_cells == 1
    assert res.edges == brute_force_isochrone(tg3, 1, 0)


def test_cp_exhaustive_tg3(tg3, tg3_base):
    exhaustive(CpEngine(prepro_cp(tg3_base)), tg3)
    exhaustive(CpEngine(prepro_cp(tg3_base), flag_mode="relaxed"), tg3)


def test_cp_requires_ecc(tg3):
    base = prepro_generic(tg3, TG3_CELLS)
    with pytest.raises(ValueError, match="ecc"):
        prepro_cp(base)


def test_cp_boundary_edges_absorbed(tg3_base):
    cp = prepro_cp(tg3_base)
    # no flat both-direction core storage remains: upward core edges obey
    # the core rank order strictly
    g = tg3_base.graph
    for u in range(g.n):
        for i in range(cp.up_index[u], cp.up_index[u + 1]):
            pass  # rebuilt CSR is well formed
    assert cp.corder.size == 4


def test_cd_mountain_cell_activated(tg3m, tg3m_mlp):
    cells = tg3m_mlp.level_cells(1)
    base = prepro_generic(tg3m, cells)
    compute_core_ecc(base)
    eng = CdEngine(base)
    res = eng.query(0, 5)
    pairs = res.edges.as_pairs(tg3m)
    assert (2, 3, "in_out") in pairs and (3, 4, "out_in") in pairs
    want = brute_force_isochrone(tg3m, 0, 5)
    assert res.edges == want


def test_boundary_diameter_tg3(tg3_edge_base):
    assert compute_boundary_diameter(tg3_edge_base, 0) == 4
    assert compute_boundary_diameter(tg3_edge_base, 1) == 4


def test_single_edge_cell_diameter():
    # cell {edge 1->2}: both endpoints ambiguous
    g = parse_dimacs_gr("p sp 2 2\na 1 2 3\na 2 1 4\n")
    ep = derive_edge_partition(
        g, MultilevelPartition(cells=np.array([[0, 1]], dtype=np.int32)), 1
    )
    base = prepro_generic(g, ep)
    # D = max over boundary b of max_u d(u, b) = max(d(1,2), d(2,1)) = 4
    assert max(compute_boundary_diameter(base, c) for c in range(2)) == 4


def test_dt_bounds_tg3(tg3_edge_base):
    data = prepro_dt(tg3_edge_base, C=0)
    assert data.bounds.lower[0][1] == 0
    assert data.bounds.upper[0][1] == 6
    assert data.bounds.lower[0][0] == 0 and data.bounds.lower[1][1] == 0
    # true max pair distance d(1,6)=6 fits under the bound
    d = full_distances(tg3_edge_base.orig_graph, 0)
    assert d[5] == 6


def test_dt_exhaustive_tg3(tg3, tg3_edge_base):
    for C in (0, 2, tg3.n):
        exhaustive(DtEngine(prepro_dt(tg3_edge_base, C=C)), tg3)


def test_dt_rejects_oversized_compression(tg3_edge_base):
    with pytest.raises(ValueError, match="exceeds"):
        prepro_dt(tg3_edge_base, C=100)


def test_dt_requires_edge_partition(tg3_base):
    with pytest.raises(ValueError, match="edge partition"):
        prepro_dt(tg3_base, C=0)


def test_bounds_sandwich_random(medium_setup):
    graph, _, base_e = medium_setup
    data = prepro_dt(base_e, C=graph.n // 10)
    rng = np.random.default_rng(41)
    home = data.vertex_home_cell
    new_id = base_e.perm.new_id_of
    for s in rng.integers(0, graph.n, 6):
        d = full_distances(graph, int(s))
        ci = int(home[new_id[s]])
        for v in rng.integers(0, graph.n, 200):
            cj = int(home[new_id[v]])
            assert data.bounds.lower[ci][cj] <= d[v] <= data.bounds.upper[ci][cj]


def test_dt_compression_neutrality(medium_setup):
    graph, _, base_e = medium_setup
    engines = [DtEngine(prepro_dt(base_e, C=c))
               for c in (0, 32, graph.n // 2)]
    rng = np.random.default_rng(43)
    d0 = full_distances(graph, 0)
    for s in rng.integers(0, graph.n, 4):
        for tau in (0, int(d0.max() // 3), int(d0.max() // 2)):
            results = [e.query(int(s), tau).edges.content_hash()
                       for e in engines]
            assert len(set(results)) == 1


def test_all_strategies_medium_threads(medium_setup):
    graph, base, base_e = medium_setup
    engines = [
        CdEngine(base),
        CpEngine(prepro_cp(base)),
        CpEngine(prepro_cp(base), flag_mode="relaxed"),
        DtEngine(prepro_dt(base_e, C=64)),
    ]
    rng = np.random.default_rng(47)
    d0 = full_distances(graph, 0)
    taus = [0, int(d0.max() // 5), int(d0.max() // 2), int(d0.max()) + 1]
    for s in rng.integers(0, graph.n, 4):
        for tau in taus:
            want = brute_force_isochrone(graph, int(s), tau)
            h = want.content_hash()
            for eng in engines:
                for th in (1, 2, 4):
                    assert eng.query(int(s), tau, threads=th).edges.content_hash() == h


def test_dummy_edge_neutrality(medium_setup):
    # stripping the INF entries never changes any label
    from isoroute import _isophast_kernels as PK
    from isoroute.isophast import PhastQueryContext

    graph, base, _ = medium_setup
    s = 5
    d = full_distances(graph, s)
    tau = int(np.percentile(d, 50))

    keep = base.ie_w < INF
    counts = np.array([
        int(keep[base.ie_start[p]:base.ie_start[p + 1]].sum())
        for p in range(base.iverts.size)
    ], dtype=np.int64)
    stripped_start = np.zeros_like(base.ie_start)
    stripped_start[1:] = np.cumsum(counts)
    sel = np.flatnonzero(keep)

    def run(ie_start, ie_mid, ie_tail, ie_w, ie_eid, ie_emit):
        ctx = PhastQueryContext(graph.n, base.k)
        cur = ctx.begin()
        PK.cd_phase12_kernel(
            base.up_index, base.up_head, base.up_w, base.up_eid, base.up_emit,
            base.rup_index, base.rup_tail, base.rup_eid, base.rup_emit,
            base.is_core, base.cell_of, base.ecc, base.cpair_start,
            base.cpair_v,
            np.int32(s), np.int64(tau),
            ctx.dist, ctx.ver, cur, ctx.state, ctx.touched,
            ctx.i_flag, ctx.o_flag,
        )
        PK.entry_sweep_kernel(
            base.iverts, np.int64(0), np.int64(base.iverts.size),
            ie_start, ie_mid, ie_tail, ie_w, ie_eid, ie_emit,
            graph.edge_tail, graph.fwd_head,
            np.int64(tau), ctx.dist, ctx.ver, cur, False,
        )
        return np.where(ctx.ver == cur, ctx.dist, INF)

    # full-slice label pass with dummies present vs the stripped arrays
    with_dummies = run(base.ie_start, base.ie_start[1:], base.ie_tail,
                       base.ie_w, base.ie_eid, base.ie_emit)
    without = run(stripped_start, stripped_start[1:], base.ie_tail[sel],
                  base.ie_w[sel], base.ie_eid[sel],
                  np.zeros(sel.size, dtype=np.uint8))
    assert np.array_equal(with_dummies, without)


def test_active_set_soundness_dt(medium_setup):
    graph, _, base_e = medium_setup
    data = prepro_dt(base_e, C=32)
    eng = DtEngine(data)
    rng = np.random.default_rng(53)
    for s in rng.integers(0, graph.n, 3):
        d = full_distances(graph, int(s))
        tau = int(np.percentile(d, 45))
        res = eng.query(int(s), tau)
        want = brute_force_isochrone(graph, int(s), tau)
        assert res.edges == want
        ci = int(data.vertex_home_cell[base_e.to_source(int(s))])
        active = set(np.flatnonzero(
            (data.bounds.lower[ci] <= tau) & (tau < data.bounds.upper[ci])
        ).tolist())
        to_internal_edge = np.argsort(base_e.edge_origin)
        for e in want.edge_ids:
            assert int(base_e.cell_of_edge[to_internal_edge[e]]) in active


def test_single_cell_degenerates_to_full_sweep(tg1):
    base = prepro_generic(tg1, np.zeros(4, dtype=np.int32))
    compute_core_ecc(base)
    eng = CdEngine(base)
    assert (base.is_core == 0).all()
    exhaustive(eng, tg1, taus=range(0, 11))
