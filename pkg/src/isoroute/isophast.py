"""Contraction-based isochrone strategies: shared core-preserving
preprocessing plus the core-search (CD), core-sweep (CP), and
distance-bounds-table (DT) query variants."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _ch_kernels as CK
from . import _isophast_kernels as PK
from .ch import DEFAULT_HOP_CAPS, DEFAULT_SETTLE_CAPS
from .graph import INF, Permutation, RoadGraph, apply_permutation
from .isocrp import QueryResult, QueryStats
from .isodijkstra import IsochroneEdgeSet
from .partition import EdgePartition


@dataclass
class IsoPhastBase:
    """Output of the generic core-preserving preprocessing.

    All arrays live in the core-first vertex order (`perm`); `graph` is
    the permuted graph and `edge_origin` maps its canonical edge ids back
    to the input graph's."""

    graph: RoadGraph  # permuted
    orig_graph: RoadGraph
    perm: Permutation
    edge_origin: np.ndarray  # int32[m]
    kind: str  # "vertex" or "edge"
    k: int
    cell_of: np.ndarray  # int32[n]; -1 for ambiguous vertices of an edge partition
    cell_of_edge: np.ndarray | None
    is_core: np.ndarray  # uint8[n]
    rank: np.ndarray  # int32[n]
    # upward graph (within-cell upward edges + all core-to-core edges)
    up_index: np.ndarray
    up_head: np.ndarray
    up_w: np.ndarray
    up_eid: np.ndarray
    up_emit: np.ndarray  # uint8: original with both endpoints core
    rup_index: np.ndarray
    rup_tail: np.ndarray
    rup_eid: np.ndarray
    rup_emit: np.ndarray
    # interior sweep structures (grouped by cell, descending local level)
    iv_start: np.ndarray  # int64[k+1]
    iverts: np.ndarray  # int32
    ie_start: np.ndarray  # int64[len(iverts)+1]
    ie_mid: np.ndarray  # int64: end of the real (relaxing) entry prefix
    ie_tail: np.ndarray
    ie_w: np.ndarray  # INF marks a dummy mirror of an upward original edge
    ie_eid: np.ndarray  # int32, -1 for shortcuts
    ie_emit: np.ndarray  # uint8: eid >= 0
    # core bookkeeping
    cstart: np.ndarray  # int64[k+1] core members per cell (vertex kind) or
    cverts: np.ndarray  # per-cell ambiguous lists (edge kind, multi-membership)
    ccore_index: np.ndarray  # cell-restricted core graph (vertex kind)
    ccore_head: np.ndarray
    ccore_w: np.ndarray
    fcore_index: np.ndarray  # full core graph
    fcore_head: np.ndarray
    fcore_w: np.ndarray
    rcore_index: np.ndarray  # reverse full core graph
    rcore_tail: np.ndarray
    rcore_w: np.ndarray
    # shortcuts added by cell contraction (always core-to-core)
    sc_t: np.ndarray = field(default=None)
    sc_h: np.ndarray = field(default=None)
    sc_w: np.ndarray = field(default=None)
    ecc: np.ndarray | None = None  # int64[n], core vertices only
    cpair_start: np.ndarray | None = None
    cpair_v: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.graph.n

    def to_source(self, v: int) -> int:
        return int(self.perm.new_id_of[v])


def _csr_by(n, keys, order=None):
    start = np.zeros(n + 1, dtype=np.int64)
    np.add.at(start, np.asarray(keys, dtype=np.int64) + 1, 1)
    np.cumsum(start, out=start)
    return start


def _build_core_csr(n, tails, heads, ws, reverse=False):
    if reverse:
        tails, heads = heads, tails
    order = np.lexsort((heads, tails))
    t, h, w = tails[order], heads[order], ws[order]
    index = np.zeros(n + 1, dtype=np.int64)
    np.add.at(index, t.astype(np.int64) + 1, 1)
    np.cumsum(index, out=index)
    return index, h.astype(np.int32), w.astype(np.int64)


def prepro_generic(
    graph: RoadGraph,
    partition,
    kind: str | None = None,
    threads: int = 2,
    hop_caps=DEFAULT_HOP_CAPS,
    settle_caps=DEFAULT_SETTLE_CAPS,
) -> IsoPhastBase:
    """Per-cell contraction of interior vertices (cores kept), followed
    by assembly of the single upward graph, the downward interior
    structures with dummy mirrors, and the core graphs.

    The result lives in the core-first vertex order (cores grouped by
    cell, interiors by cell and descending level), so sweeps run over
    consecutive label entries; `edge_origin` maps edge ids back.
    """
    orig_graph = graph
    n, m = graph.n, graph.m
    if isinstance(partition, EdgePartition):
        kind = "edge"
        ep = partition
        k = ep.k
        cell_of_edge = ep.cell_of_edge.astype(np.int32)
        is_core = ep.ambiguous.astype(np.uint8)
        cell_of = np.full(n, -1, dtype=np.int32)
        interior_mask = ~ep.ambiguous
        # a distinct vertex's single cell: cell of any incident edge
        cell_of[graph.edge_tail[interior_mask[graph.edge_tail]]] = \
            cell_of_edge[interior_mask[graph.edge_tail]]
        cell_of[graph.fwd_head[interior_mask[graph.fwd_head]]] = \
            cell_of_edge[interior_mask[graph.fwd_head]]
    else:
        kind = "vertex"
        cell_of = np.asarray(partition, dtype=np.int32)
        k = int(cell_of.max()) + 1 if n else 0
        cell_of_edge = None
        cross = cell_of[graph.edge_tail] != cell_of[graph.fwd_head]
        is_core = np.zeros(n, dtype=np.uint8)
        is_core[graph.edge_tail[cross]] = 1
        is_core[graph.fwd_head[cross]] = 1

    # per-cell subgraphs for contraction
    if kind == "vertex":
        in_cell = cell_of[graph.edge_tail] == cell_of[graph.fwd_head]
        edge_cell = np.where(in_cell, cell_of[graph.edge_tail], -1)
    else:
        edge_cell = cell_of_edge.copy()

    interior = is_core == 0
    local_rank = np.full(n, -1, dtype=np.int64)
    local_level = np.zeros(n, dtype=np.int64)
    shortcuts_t, shortcuts_h, shortcuts_w = [], [], []
    hop_arr = np.asarray(hop_caps, dtype=np.int64)
    cap_arr = np.asarray(settle_caps, dtype=np.int64)
    frac_arr = np.asarray([0.9, 1.0])

    def contract_cell(c):
        es = np.flatnonzero(edge_cell == c)
        if es.size == 0:
            return c, None
        vs = np.unique(np.concatenate([graph.edge_tail[es], graph.fwd_head[es]]))
        lid = np.full(n, -1, dtype=np.int64)
        lid[vs] = np.arange(vs.size)
        lt = lid[graph.edge_tail[es]].astype(np.int32)
        lh = lid[graph.fwd_head[es]].astype(np.int32)
        lw = graph.fwd_weight[es]
        keep = is_core[vs].astype(np.uint8)
        r, lv, st, sh, sw, _ = CK.contract_kernel(
            vs.size, lt, lh, lw, keep, hop_arr, cap_arr, frac_arr
        )
        return c, (vs, r, lv, st, sh, sw)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        for c, res in pool.map(contract_cell, range(k)):
            if res is None:
                continue
            vs, r, lv, st, sh, sw = res
            mask = r >= 0
            local_rank[vs[mask]] = r[mask]
            local_level[vs] = np.maximum(local_level[vs], lv)
            if st.size:
                shortcuts_t.append(vs[st])
                shortcuts_h.append(vs[sh])
                shortcuts_w.append(sw)

    sc_t = (np.concatenate(shortcuts_t) if shortcuts_t
            else np.empty(0, dtype=np.int64)).astype(np.int64)
    sc_h = (np.concatenate(shortcuts_h) if shortcuts_h
            else np.empty(0, dtype=np.int64)).astype(np.int64)
    sc_w = (np.concatenate(shortcuts_w) if shortcuts_w
            else np.empty(0, dtype=np.int64)).astype(np.int64)
    if sc_t.size:
        # different contractions can propose the same shortcut pair; keep
        # the shortest, and none that a parallel original already beats
        order = np.lexsort((sc_w, sc_h, sc_t))
        sc_t, sc_h, sc_w = sc_t[order], sc_h[order], sc_w[order]
        first = np.ones(sc_t.size, dtype=bool)
        first[1:] = (sc_t[1:] != sc_t[:-1]) | (sc_h[1:] != sc_h[:-1])
        sc_t, sc_h, sc_w = sc_t[first], sc_h[first], sc_w[first]
        ot = graph.edge_tail.astype(np.int64)
        oh = graph.fwd_head.astype(np.int64)
        okey = ot * np.int64(n) + oh
        ow_sorted = np.lexsort((graph.fwd_weight, okey))
        okey_s = okey[ow_sorted]
        ow_s = graph.fwd_weight[ow_sorted]
        fo = np.ones(okey_s.size, dtype=bool)
        fo[1:] = okey_s[1:] != okey_s[:-1]
        okey_u, ow_u = okey_s[fo], ow_s[fo]
        skey = sc_t * np.int64(n) + sc_h
        idx = np.searchsorted(okey_u, skey)
        has_orig = (idx < okey_u.size) & (okey_u[np.minimum(idx, okey_u.size - 1)] == skey)
        dominated = has_orig & (ow_u[np.minimum(idx, okey_u.size - 1)] <= sc_w)
        sc_t, sc_h, sc_w = sc_t[~dominated], sc_h[~dominated], sc_w[~dominated]

    # core-first permutation: cores by (cell, id), interiors by
    # (cell, descending level, id)
    int_ids = np.flatnonzero(interior)
    core_ids = np.flatnonzero(is_core == 1)
    core_sort_cell = cell_of[core_ids].astype(np.int64)
    if kind == "edge":
        amb_cell = np.full(n, np.iinfo(np.int32).max, dtype=np.int64)
        np.minimum.at(amb_cell, graph.edge_tail, cell_of_edge)
        np.minimum.at(amb_cell, graph.fwd_head, cell_of_edge)
        core_sort_cell = amb_cell[core_ids]
    core_order = core_ids[np.lexsort((core_ids, core_sort_cell))]
    int_perm = int_ids[np.lexsort((int_ids, -local_level[int_ids],
                                   cell_of[int_ids]))]
    new_id = np.empty(n, dtype=np.int32)
    new_id[core_order] = np.arange(core_order.size, dtype=np.int32)
    new_id[int_perm] = core_order.size + np.arange(int_perm.size,
                                                   dtype=np.int32)
    perm = Permutation.from_new_ids(new_id)
    n_core = core_order.size

    # move everything into the permuted space
    edge_origin = np.lexsort((
        perm.new_id_of[graph.fwd_head], perm.new_id_of[graph.edge_tail]
    )).astype(np.int32)
    graph = apply_permutation(graph, perm)
    inv = perm.inverse
    cell_of = cell_of[inv]
    is_core = is_core[inv]
    local_rank = local_rank[inv]
    local_level = local_level[inv]
    if cell_of_edge is not None:
        cell_of_edge = cell_of_edge[edge_origin]
    sc_t = perm.new_id_of[sc_t].astype(np.int64)
    sc_h = perm.new_id_of[sc_h].astype(np.int64)

    # global ranks: interiors by (cell, local rank) below all cores
    int_ids = np.arange(n_core, n, dtype=np.int64)
    rank = np.empty(n, dtype=np.int32)
    if int_ids.size:
        by_rank = int_ids[np.lexsort((local_rank[int_ids], cell_of[int_ids]))]
        rank[by_rank] = np.arange(int_ids.size, dtype=np.int32)
    rank[:n_core] = int_ids.size + np.arange(n_core, dtype=np.int32)

    # interior sweep order is the identity on [n_core, n)
    iverts = int_ids.astype(np.int32)
    iv_start = np.zeros(k + 1, dtype=np.int64)
    np.add.at(iv_start, cell_of[iverts].astype(np.int64) + 1, 1)
    np.cumsum(iv_start, out=iv_start)
    iv_pos = np.full(n, -1, dtype=np.int64)
    iv_pos[iverts] = np.arange(iverts.size)

    # classify all edges (originals + shortcuts)
    all_t = np.concatenate([graph.edge_tail.astype(np.int64), sc_t])
    all_h = np.concatenate([graph.fwd_head.astype(np.int64), sc_h])
    all_w = np.concatenate([graph.fwd_weight, sc_w])
    all_e = np.concatenate([
        np.arange(m, dtype=np.int64), np.full(sc_t.size, -1, dtype=np.int64)
    ])
    core_pair = (is_core[all_t] == 1) & (is_core[all_h] == 1)
    upward = core_pair | (rank[all_t] < rank[all_h])

    ut = all_t[upward]
    uh = all_h[upward]
    uw = all_w[upward]
    ue = all_e[upward]
    uemit = (core_pair[upward] & (ue >= 0)).astype(np.uint8)
    uord = np.lexsort((uh, ut))
    up_index = _csr_by(n, ut)
    up_head = uh[uord].astype(np.int32)
    up_w = uw[uord]
    up_eid = ue[uord].astype(np.int32)
    up_emit = uemit[uord]
    rord = np.lexsort((ut, uh))
    rup_index = _csr_by(n, uh)
    rup_tail = ut[rord].astype(np.int32)
    rup_eid = ue[rord].astype(np.int32)
    rup_emit = uemit[rord]

    # interior entries: real downward edges at their head, dummy mirrors of
    # upward originals at their (interior) tail
    down = ~upward
    ent_v = [all_h[down]]
    ent_t = [all_t[down]]
    ent_w = [all_w[down]]
    ent_e = [all_e[down]]
    up_orig_int = upward & (all_e >= 0) & ~core_pair
    ent_v.append(all_t[up_orig_int])
    ent_t.append(all_h[up_orig_int])
    ent_w.append(np.full(int(up_orig_int.sum()), INF, dtype=np.int64))
    ent_e.append(all_e[up_orig_int])
    ev = np.concatenate(ent_v)
    et = np.concatenate(ent_t)
    ew = np.concatenate(ent_w)
    ee = np.concatenate(ent_e)
    pos = iv_pos[ev]
    dummy = (ew >= INF).astype(np.int8)
    eord = np.lexsort((et, dummy, pos))
    ie_start = np.zeros(iverts.size + 1, dtype=np.int64)
    np.add.at(ie_start, pos + 1, 1)
    np.cumsum(ie_start, out=ie_start)
    real_counts = np.zeros(iverts.size, dtype=np.int64)
    np.add.at(real_counts, pos[dummy == 0], 1)
    ie_mid = ie_start[:-1] + real_counts
    ie_tail = et[eord].astype(np.int32)
    ie_w = ew[eord]
    ie_eid = ee[eord].astype(np.int32)
    ie_emit = (ie_eid >= 0).astype(np.uint8)

    # core member lists per cell
    core_ids = np.arange(n_core, dtype=np.int64)
    if kind == "vertex":
        cm_cells = cell_of[core_ids].astype(np.int64)
        cm_verts = core_ids
    else:
        amb_t = is_core[graph.edge_tail] == 1
        amb_h = is_core[graph.fwd_head] == 1
        pc = np.concatenate([cell_of_edge[amb_t], cell_of_edge[amb_h]]).astype(np.int64)
        pv = np.concatenate([graph.edge_tail[amb_t], graph.fwd_head[amb_h]]).astype(np.int64)
        uniq = np.unique(pc * np.int64(max(n, 1)) + pv)
        cm_cells = uniq // max(n, 1)
        cm_verts = uniq % max(n, 1)
    order = np.lexsort((cm_verts, cm_cells))
    cm_cells, cm_verts = cm_cells[order], cm_verts[order]
    cstart = np.zeros(k + 1, dtype=np.int64)
    np.add.at(cstart, cm_cells + 1, 1)
    np.cumsum(cstart, out=cstart)
    cverts = cm_verts.astype(np.int32)

    # core graphs: full (all core-to-core edges) and cell-restricted
    cc = core_pair
    f_idx, f_head, f_w = _build_core_csr(n, all_t[cc], all_h[cc], all_w[cc])
    r_idx, r_tail, r_w = _build_core_csr(n, all_t[cc], all_h[cc], all_w[cc],
                                         reverse=True)
    if kind == "vertex":
        same = cc & (cell_of[all_t] == cell_of[all_h])
        c_idx, c_head, c_w = _build_core_csr(
            n, all_t[same], all_h[same], all_w[same]
        )
    else:
        # only vertex partitions use the cell-restricted core graph
        c_idx, c_head, c_w = f_idx, f_head, f_w

    return IsoPhastBase(
        graph=graph, orig_graph=orig_graph, perm=perm,
        edge_origin=edge_origin,
        kind=kind, k=k, cell_of=cell_of,
        cell_of_edge=cell_of_edge, is_core=is_core,
        rank=rank,
        up_index=up_index, up_head=up_head, up_w=up_w, up_eid=up_eid,
        up_emit=up_emit,
        rup_index=rup_index, rup_tail=rup_tail, rup_eid=rup_eid,
        rup_emit=rup_emit,
        iv_start=iv_start, iverts=iverts,
        ie_start=ie_start, ie_mid=ie_mid, ie_tail=ie_tail, ie_w=ie_w,
        ie_eid=ie_eid, ie_emit=ie_emit,
        cstart=cstart, cverts=cverts,
        ccore_index=c_idx, ccore_head=c_head, ccore_w=c_w,
        fcore_index=f_idx, fcore_head=f_head, fcore_w=f_w,
        rcore_index=r_idx, rcore_tail=r_tail, rcore_w=r_w,
        sc_t=sc_t, sc_h=sc_h, sc_w=sc_w,
    )


def compute_core_ecc(base: IsoPhastBase, threads: int = 2) -> np.ndarray:
    """Restricted eccentricity of every core vertex over its own cell,
    plus the unreachable same-cell core pairs; stored on the base."""
    if base.kind != "vertex":
        raise ValueError("core eccentricities apply to vertex partitions")
    n = base.n
    ecc = np.full(n, INF, dtype=np.int64)
    pair_lists: list[tuple[np.ndarray, np.ndarray]] = []

    dists = [np.zeros(n, dtype=np.int64) for _ in range(max(1, threads))]
    vers = [np.zeros(n, dtype=np.int64) for _ in range(max(1, threads))]
    counters = [np.zeros(1, dtype=np.int64) for _ in range(max(1, threads))]
    slot = {}

    def run_cell(args):
        ci, c = args
        t = ci % max(1, threads)
        members = base.cverts[base.cstart[c]:base.cstart[c + 1]]
        if members.size == 0:
            return None
        e_out, ps, pd, npair = PK.cell_core_ecc_kernel(
            members,
            base.ccore_index, base.ccore_head, base.ccore_w,
            base.iverts, np.int64(base.iv_start[c]), np.int64(base.iv_start[c + 1]),
            base.ie_start, base.ie_tail, base.ie_w,
            dists[t], vers[t], counters[t],
        )
        return members, e_out, ps, pd

    results = []
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        for res in pool.map(run_cell, enumerate(range(base.k))):
            if res is not None:
                results.append(res)
    all_ps, all_pd = [], []
    for members, e_out, ps, pd in results:
        ecc[members] = e_out
        all_ps.append(ps)
        all_pd.append(pd)
    ps = np.concatenate(all_ps) if all_ps else np.empty(0, dtype=np.int32)
    pd = np.concatenate(all_pd) if all_pd else np.empty(0, dtype=np.int32)
    order = np.lexsort((pd, ps))
    cpair_start = np.zeros(n + 1, dtype=np.int64)
    np.add.at(cpair_start, ps.astype(np.int64) + 1, 1)
    np.cumsum(cpair_start, out=cpair_start)
    base.ecc = ecc
    base.cpair_start = cpair_start
    base.cpair_v = pd[order].astype(np.int32)
    return ecc


class PhastQueryContext:
    """Versioned labels plus per-cell flags for one engine instance."""

    def __init__(self, n: int, k: int):
        self.dist = np.full(n, INF, dtype=np.int64)
        self.ver = np.zeros(n, dtype=np.int64)
        self.state = np.zeros(n, dtype=np.uint8)
        self.touched = np.empty(max(n, 1), dtype=np.int32)
        self.i_flag = np.zeros(max(k, 1), dtype=np.uint8)
        self.o_flag = np.zeros(max(k, 1), dtype=np.uint8)
        self.cur = np.int64(0)

    def begin(self):
        self.cur += 1
        self.i_flag[:] = 0
        self.o_flag[:] = 1
        return self.cur

    def label(self, v: int) -> int:
        return int(self.dist[v]) if self.ver[v] == self.cur else int(INF)


def _combine(parts, edge_origin):
    edges = [p[0][:p[2]] for p in parts]
    dirs = [p[1][:p[2]] for p in parts]
    if not edges:
        return IsochroneEdgeSet.from_buffers([], [])
    raw = np.concatenate(edges).astype(np.int64)
    return IsochroneEdgeSet.from_buffers(
        edge_origin[raw], np.concatenate(dirs)
    )


class CdEngine:
    """Core-search strategy: the first two phases run the isochrone
    search on the upward graph; active cells then get interior sweeps."""

    name = "isophast-cd"

    def __init__(self, base: IsoPhastBase):
        if base.kind != "vertex":
            raise ValueError("CD requires a vertex partition")
        if base.ecc is None:
            raise ValueError("run compute_core_ecc first")
        self.base = base
        self.ctx = PhastQueryContext(base.n, base.k)
        self._pools: dict[int, ThreadPoolExecutor] = {}

    def _pool(self, threads):
        if threads not in self._pools:
            self._pools[threads] = ThreadPoolExecutor(max_workers=threads)
        return self._pools[threads]

    def _phase3(self, actives, tau, threads):
        b, ctx = self.base, self.ctx

        def sweep(c):
            return PK.entry_sweep_kernel(
                b.iverts, np.int64(b.iv_start[c]), np.int64(b.iv_start[c + 1]),
                b.ie_start, b.ie_mid, b.ie_tail, b.ie_w, b.ie_eid, b.ie_emit,
                b.graph.edge_tail, b.graph.fwd_head,
                np.int64(tau), ctx.dist, ctx.ver, ctx.cur, True,
            )

        if threads <= 1 or len(actives) <= 1:
            return [sweep(c) for c in actives]
        return list(self._pool(threads).map(sweep, actives))

    def query(self, source: int, tau: int, threads: int = 1) -> QueryResult:
        b, ctx = self.base, self.ctx
        t0 = time.perf_counter()
        src = b.to_source(source)
        cur = ctx.begin()
        ctx.i_flag[b.cell_of[src]] = 1
        e1, d1, n1, settled = PK.cd_phase12_kernel(
            b.up_index, b.up_head, b.up_w, b.up_eid, b.up_emit,
            b.rup_index, b.rup_tail, b.rup_eid, b.rup_emit,
            b.is_core, b.cell_of,
            b.ecc, b.cpair_start, b.cpair_v,
            np.int32(src), np.int64(tau),
            ctx.dist, ctx.ver, cur, ctx.state, ctx.touched,
            ctx.i_flag, ctx.o_flag,
        )
        t1 = time.perf_counter()
        actives = np.flatnonzero((ctx.i_flag == 1) & (ctx.o_flag == 1))
        parts = [(e1, d1, n1, settled)] + self._phase3(actives, tau, threads)
        t2 = time.perf_counter()
        swept = sum(p[3] for p in parts[1:])
        return QueryResult(
            edges=_combine(parts, b.edge_origin),
            stats=QueryStats(
                settled=int(settled + swept),
                active_cells=int(actives.size),
                t_upward_ms=(t1 - t0) * 1e3,
                t_scan_ms=(t2 - t1) * 1e3,
                t_total_ms=(t2 - t0) * 1e3,
            ),
        )


@dataclass
class CpData:
    """Generic structures with the core itself contracted: a rebuilt
    upward graph plus the core's downward entries in level order."""

    base: IsoPhastBase
    up_index: np.ndarray
    up_head: np.ndarray
    up_w: np.ndarray
    corder: np.ndarray  # int32, core vertices in sweep order
    ce_start: np.ndarray  # int64[len(corder)+1]
    ce_mid: np.ndarray
    ce_tail: np.ndarray
    ce_w: np.ndarray
    ce_eid: np.ndarray
    ce_emit: np.ndarray


def prepro_cp(base: IsoPhastBase,
              hop_caps=DEFAULT_HOP_CAPS,
              settle_caps=DEFAULT_SETTLE_CAPS) -> CpData:
    """Contract the core with a greedy order, reorder core vertices by
    hierarchy level, and rebuild the upward graph; the flat boundary
    edges are absorbed into the rank split."""
    if base.ecc is None:
        raise ValueError("eccentricities must be computed before the core "
                         "contraction replaces the boundary edges")
    graph = base.graph
    n, m = graph.n, graph.m
    core_ids = np.flatnonzero(base.is_core == 1).astype(np.int64)
    lid = np.full(n, -1, dtype=np.int64)
    lid[core_ids] = np.arange(core_ids.size)

    cc_orig = ((base.is_core[graph.edge_tail] == 1)
               & (base.is_core[graph.fwd_head] == 1))
    # cell-contraction shortcuts may also join interiors; only the
    # core-to-core ones take part in the core hierarchy
    sc_cc = (base.is_core[base.sc_t] == 1) & (base.is_core[base.sc_h] == 1)
    cg_t = np.concatenate([graph.edge_tail[cc_orig].astype(np.int64),
                           base.sc_t[sc_cc].astype(np.int64)])
    cg_h = np.concatenate([graph.fwd_head[cc_orig].astype(np.int64),
                           base.sc_h[sc_cc].astype(np.int64)])
    cg_w = np.concatenate([graph.fwd_weight[cc_orig], base.sc_w[sc_cc]])
    r, lv, st, sh, sw, _ = CK.contract_kernel(
        core_ids.size,
        lid[cg_t].astype(np.int32), lid[cg_h].astype(np.int32), cg_w,
        np.zeros(core_ids.size, dtype=np.uint8),
        np.asarray(hop_caps, dtype=np.int64),
        np.asarray(settle_caps, dtype=np.int64),
        np.asarray([0.9, 1.0]),
    )
    core_rank = np.full(n, -1, dtype=np.int64)
    core_level = np.zeros(n, dtype=np.int64)
    core_rank[core_ids] = r
    core_level[core_ids] = lv

    # full edge universe among cores: originals + cell shortcuts + new ones
    co_t = np.concatenate([cg_t, core_ids[st]]) if st.size else cg_t
    co_h = np.concatenate([cg_h, core_ids[sh]]) if sh.size else cg_h
    co_w = np.concatenate([cg_w, sw]) if sw.size else cg_w
    co_e = np.concatenate([
        np.flatnonzero(cc_orig).astype(np.int64),
        np.full(int(sc_cc.sum()) + st.size, -1, dtype=np.int64),
    ])
    co_up = core_rank[co_t] < core_rank[co_h]

    # non-core edges and shortcuts keep the generic upward split (interior
    # structures are untouched; downward halves already live in the entries)
    nc_up = (~cc_orig) & (base.rank[graph.edge_tail] < base.rank[graph.fwd_head])
    sc_up = (~sc_cc) & (base.rank[base.sc_t] < base.rank[base.sc_h])
    ut = np.concatenate([graph.edge_tail[nc_up].astype(np.int64),
                         base.sc_t[sc_up].astype(np.int64), co_t[co_up]])
    uh = np.concatenate([graph.fwd_head[nc_up].astype(np.int64),
                         base.sc_h[sc_up].astype(np.int64), co_h[co_up]])
    uw = np.concatenate([graph.fwd_weight[nc_up],
                         base.sc_w[sc_up], co_w[co_up]])
    uord = np.lexsort((uh, ut))
    up_index = _csr_by(n, ut)
    up_head = uh[uord].astype(np.int32)
    up_w = uw[uord]

    # core entries: downward core edges at their head + dummy mirrors of
    # upward core originals at their tail
    corder = core_ids[np.lexsort((core_ids, -core_level[core_ids]))].astype(np.int32)
    cpos = np.full(n, -1, dtype=np.int64)
    cpos[corder] = np.arange(corder.size)
    dn = ~co_up
    ent_v = [co_h[dn]]
    ent_t = [co_t[dn]]
    ent_w = [co_w[dn]]
    ent_e = [co_e[dn]]
    dum = co_up & (co_e >= 0)
    ent_v.append(co_t[dum])
    ent_t.append(co_h[dum])
    ent_w.append(np.full(int(dum.sum()), INF, dtype=np.int64))
    ent_e.append(co_e[dum])
    ev = np.concatenate(ent_v)
    et = np.concatenate(ent_t)
    ew = np.concatenate(ent_w)
    ee = np.concatenate(ent_e)
    pos = cpos[ev]
    dummy = (ew >= INF).astype(np.int8)
    eord = np.lexsort((et, ee, dummy, pos))
    ce_start = np.zeros(corder.size + 1, dtype=np.int64)
    np.add.at(ce_start, pos + 1, 1)
    np.cumsum(ce_start, out=ce_start)
    real_counts = np.zeros(corder.size, dtype=np.int64)
    np.add.at(real_counts, pos[dummy == 0], 1)
    return CpData(
        base=base,
        up_index=up_index, up_head=up_head, up_w=up_w,
        corder=corder,
        ce_start=ce_start,
        ce_mid=ce_start[:-1] + real_counts,
        ce_tail=et[eord].astype(np.int32),
        ce_w=ew[eord],
        ce_eid=ee[eord].astype(np.int32),
        ce_emit=(ee[eord] >= 0).astype(np.uint8),
    )


class CpEngine:
    """Core-sweep strategy: an exhaustive upward search, a level-order
    sweep over the core with flag evaluation, then interior sweeps."""

    name = "isophast-cp"

    def __init__(self, data: CpData, flag_mode: str = "default"):
        if flag_mode not in ("default", "relaxed"):
            raise ValueError("flag_mode must be default or relaxed")
        self.data = data
        self.base = data.base
        self.flag_mode = flag_mode
        self.ctx = PhastQueryContext(self.base.n, self.base.k)
        self._pools: dict[int, ThreadPoolExecutor] = {}

    def _pool(self, threads):
        if threads not in self._pools:
            self._pools[threads] = ThreadPoolExecutor(max_workers=threads)
        return self._pools[threads]

    def query(self, source: int, tau: int, threads: int = 1) -> QueryResult:
        b, d, ctx = self.base, self.data, self.ctx
        t0 = time.perf_counter()
        src = b.to_source(source)
        cur = ctx.begin()
        ctx.i_flag[b.cell_of[src]] = 1
        settled = CK.upward_search_kernel(
            d.up_index, d.up_head, d.up_w,
            np.array([src], dtype=np.int32),
            np.zeros(1, dtype=np.int64),
            np.int64(-1),
            ctx.dist, ctx.ver, cur,
        )
        t1 = time.perf_counter()
        core_out = PK.entry_sweep_kernel(
            d.corder, np.int64(0), np.int64(d.corder.size),
            d.ce_start, d.ce_mid, d.ce_tail, d.ce_w, d.ce_eid, d.ce_emit,
            b.graph.edge_tail, b.graph.fwd_head,
            np.int64(tau), ctx.dist, ctx.ver, cur, True,
        )
        PK.cp_flags_kernel(
            b.cstart, b.cverts, b.ecc, b.cpair_start, b.cpair_v,
            np.int64(tau), ctx.dist, ctx.ver, cur,
            self.flag_mode == "relaxed",
            ctx.i_flag, ctx.o_flag,
        )
        ctx.i_flag[b.cell_of[src]] = 1
        actives = np.flatnonzero((ctx.i_flag == 1) & (ctx.o_flag == 1))

        def sweep(c):
            return PK.entry_sweep_kernel(
                b.iverts, np.int64(b.iv_start[c]), np.int64(b.iv_start[c + 1]),
                b.ie_start, b.ie_mid, b.ie_tail, b.ie_w, b.ie_eid, b.ie_emit,
                b.graph.edge_tail, b.graph.fwd_head,
                np.int64(tau), ctx.dist, ctx.ver, cur, True,
            )

        if threads <= 1 or actives.size <= 1:
            parts = [sweep(c) for c in actives]
        else:
            parts = list(self._pool(threads).map(sweep, actives))
        t2 = time.perf_counter()
        swept = sum(p[3] for p in parts)
        return QueryResult(
            edges=_combine([core_out] + parts, b.edge_origin),
            stats=QueryStats(
                settled=int(settled + d.corder.size + swept),
                active_cells=int(actives.size),
                t_upward_ms=(t1 - t0) * 1e3,
                t_scan_ms=(t2 - t1) * 1e3,
                t_total_ms=(t2 - t0) * 1e3,
            ),
        )

def _cell_vertex_lists(base: IsoPhastBase) -> tuple[np.ndarray, np.ndarray]:
    """CSR of each cell's vertex set: interior vertices plus (possibly
    shared) boundary members."""
    k = base.k
    chunks = []
    sizes = np.zeros(k, dtype=np.int64)
    for c in range(k):
        ints = base.iverts[base.iv_start[c]:base.iv_start[c + 1]]
        bnds = base.cverts[base.cstart[c]:base.cstart[c + 1]]
        merged = np.concatenate([ints, bnds])
        chunks.append(merged)
        sizes[c] = merged.size
    cv_start = np.zeros(k + 1, dtype=np.int64)
    cv_start[1:] = np.cumsum(sizes)
    cv_verts = (np.concatenate(chunks) if chunks
                else np.empty(0, dtype=np.int32)).astype(np.int32)
    return cv_start, cv_verts


def compute_boundary_diameter(base: IsoPhastBase, cell: int,
                              _scratch=None) -> int:
    """Max distance from any vertex of the cell to one of its boundary
    vertices (distances not restricted to the cell): per boundary vertex,
    a search on the reverse core graph until the cell's boundary is
    settled, then a level-order pass over the cell's interior."""
    n = base.n
    if _scratch is None:
        _scratch = (np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64),
                    np.zeros(n, dtype=np.int64), np.zeros(1, dtype=np.int64))
    dist, dver, bmark, counter = _scratch
    members = base.cverts[base.cstart[cell]:base.cstart[cell + 1]]
    if members.size == 0:
        return 0
    counter[0] += 1
    bstamp = counter[0]
    bmark[members] = bstamp
    diameter = np.int64(0)
    for v in members:
        counter[0] += 1
        run = counter[0]
        maxb = PK.reverse_core_until_kernel(
            base.rcore_index, base.rcore_tail, base.rcore_w,
            np.int32(v), members, bmark, bstamp,
            dist, dver, run,
        )
        maxi = PK.reverse_cell_sweep_kernel(
            base.up_index, base.up_head, base.up_w,
            base.iverts, np.int64(base.iv_start[cell]),
            np.int64(base.iv_start[cell + 1]),
            dist, dver, run,
        )
        ecc_b = max(int(maxb), int(maxi))
        if ecc_b > diameter:
            diameter = ecc_b
    return int(diameter)


@dataclass
class DistanceBoundsTable:
    lower: np.ndarray  # int64[k][k]
    upper: np.ndarray  # int64[k][k]

    def validate_pair(self, ci: int, cj: int, d: int) -> bool:
        return bool(self.lower[ci][cj] <= d <= self.upper[ci][cj])


@dataclass
class DtData:
    """Distance-bounds strategy data: bounds table over edge cells, a
    fresh greedy hierarchy, the shared compressed top graph, and per-cell
    selection graphs with membership flags."""

    base: IsoPhastBase
    C: int
    bounds: DistanceBoundsTable
    diameters: np.ndarray
    vertex_home_cell: np.ndarray  # int32[n], lowest incident edge cell
    up_index: np.ndarray  # greedy full hierarchy, upward CSR
    up_head: np.ndarray
    up_w: np.ndarray
    # shared compressed top graph
    gc_heads: np.ndarray
    gc_start: np.ndarray
    gc_mid: np.ndarray
    gc_tail: np.ndarray
    gc_w: np.ndarray
    gc_eid: np.ndarray
    gc_emit: np.ndarray
    gc_pack: np.ndarray  # int64: (tail << 32) | min(w, 2^31-1)
    # per-cell selection graphs (heads exclude the compressed top)
    h_start: np.ndarray  # int64[k+1] into heads_all
    heads_all: np.ndarray
    e_start: np.ndarray  # int64[len(heads_all)+1]
    e_mid: np.ndarray
    e_tail: np.ndarray
    e_w: np.ndarray
    e_eid: np.ndarray
    e_emit: np.ndarray
    e_pack: np.ndarray


def prepro_dt(base: IsoPhastBase, C: int = 0, threads: int = 2,
              hop_caps=DEFAULT_HOP_CAPS,
              settle_caps=DEFAULT_SETTLE_CAPS) -> DtData:
    """Distance bounds from multi-source sweeps on the core-preserving
    hierarchy, then a fresh greedy hierarchy with per-cell selection
    graphs and top-of-hierarchy compression."""
    if base.kind != "edge":
        raise ValueError("DT requires an edge partition")
    graph = base.graph
    n, m, k = base.n, graph.m, base.k
    if C > n:
        raise ValueError(f"compressed subgraph size {C} exceeds {n} vertices")

    # backward boundary diameters
    scratch = (np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64),
               np.zeros(n, dtype=np.int64), np.zeros(1, dtype=np.int64))
    diameters = np.zeros(k, dtype=np.int64)
    for c in range(k):
        diameters[c] = compute_boundary_diameter(base, c, scratch)

    # bounds: per source cell, multi-source core search + full interior
    # sweep, tracking min/max labels per target cell; cells run in parallel
    cv_start, cv_verts = _cell_vertex_lists(base)
    lower = np.zeros((k, k), dtype=np.int64)
    upper = np.full((k, k), INF, dtype=np.int64)
    nthreads = max(1, threads)
    ctxs = [PhastQueryContext(n, k) for _ in range(nthreads)]

    def bounds_row(args):
        ti, c = args
        members = base.cverts[base.cstart[c]:base.cstart[c + 1]]
        if members.size == 0:
            lower[c, :] = 0
            upper[c, :] = INF
            return
        ctx = ctxs[ti % nthreads]
        lo_row = np.empty(k, dtype=np.int64)
        hi_row = np.empty(k, dtype=np.int64)
        cur = ctx.begin()
        CK.upward_search_kernel(
            base.up_index, base.up_head, base.up_w,
            members, np.zeros(members.size, dtype=np.int64), np.int64(-1),
            ctx.dist, ctx.ver, cur,
        )
        PK.entry_sweep_kernel(
            base.iverts, np.int64(0), np.int64(base.iverts.size),
            base.ie_start, base.ie_mid, base.ie_tail, base.ie_w,
            base.ie_eid, base.ie_emit,
            graph.edge_tail, graph.fwd_head,
            np.int64(0), ctx.dist, ctx.ver, cur, False,
        )
        PK.minmax_per_cell_kernel(cv_start, cv_verts, ctx.dist, ctx.ver, cur,
                                  lo_row, hi_row)
        lower[c, :] = np.minimum(lo_row, INF)
        upper[c, :] = np.where(
            hi_row >= INF, INF,
            np.minimum(hi_row + diameters[c], INF),
        )

    # round-robin so each worker keeps reusing its own context
    with ThreadPoolExecutor(max_workers=nthreads) as pool:
        jobs = [(i % nthreads, c) for i, c in enumerate(range(k))]
        by_worker: dict[int, list] = {}
        for ti, c in jobs:
            by_worker.setdefault(ti, []).append(c)

        def run_worker(ti):
            for c in by_worker.get(ti, []):
                bounds_row((ti, c))

        list(pool.map(run_worker, range(nthreads)))

    # fresh greedy hierarchy over the whole graph
    rank2, level2, st, sh, sw, _ = CK.contract_kernel(
        n, graph.edge_tail.astype(np.int32), graph.fwd_head.astype(np.int32),
        graph.fwd_weight, np.zeros(n, dtype=np.uint8),
        np.asarray(hop_caps, dtype=np.int64),
        np.asarray(settle_caps, dtype=np.int64),
        np.asarray([0.9, 1.0]),
    )
    all_t = np.concatenate([graph.edge_tail.astype(np.int64), st.astype(np.int64)])
    all_h = np.concatenate([graph.fwd_head.astype(np.int64), sh.astype(np.int64)])
    all_w = np.concatenate([graph.fwd_weight, sw])
    all_e = np.concatenate([np.arange(m, dtype=np.int64),
                            np.full(st.size, -1, dtype=np.int64)])
    up = rank2[all_t] < rank2[all_h]
    ut, uh, uw = all_t[up], all_h[up], all_w[up]
    uord = np.lexsort((uh, ut))
    up_index = _csr_by(n, ut)

    order2 = np.lexsort((np.arange(n), -level2)).astype(np.int32)
    pos2 = np.empty(n, dtype=np.int64)
    pos2[order2] = np.arange(n)
    dn_mask = ~up
    dn_t, dn_h, dn_w_, dn_e = all_t[dn_mask], all_h[dn_mask], all_w[dn_mask], all_e[dn_mask]
    dord = np.lexsort((dn_t, pos2[dn_h]))
    dn_t, dn_h, dn_w_, dn_e = dn_t[dord], dn_h[dord], dn_w_[dord], dn_e[dord]
    dn_start = np.zeros(n + 1, dtype=np.int64)
    np.add.at(dn_start, pos2[dn_h] + 1, 1)
    np.cumsum(dn_start, out=dn_start)

    # emission slots: every original edge at its lower-ranked endpoint
    # (real downward entry at the head, dummy mirror at an upward tail)
    topc = np.zeros(n, dtype=bool)
    if C > 0:
        topc[rank2 >= n - C] = True
    up_orig = up & (all_e >= 0)
    dummy_slot = all_t[up_orig]
    dummy_tail = all_h[up_orig]
    dummy_eid = all_e[up_orig]

    cell_of_edge = base.cell_of_edge

    # shared top graph: entries of compressed heads + dummies slotted there
    gc_sel = np.flatnonzero(topc)
    gc_sel = gc_sel[np.argsort(pos2[gc_sel], kind="stable")]
    gc_entries_parts = []
    gcp = np.full(n, -1, dtype=np.int64)
    gcp[gc_sel] = np.arange(gc_sel.size)
    ge_v, ge_t, ge_w, ge_e = [], [], [], []
    gd = topc[dn_h]
    ge_v.append(dn_h[gd]); ge_t.append(dn_t[gd]); ge_w.append(dn_w_[gd]); ge_e.append(dn_e[gd])
    gdum = topc[dummy_slot]
    ge_v.append(dummy_slot[gdum]); ge_t.append(dummy_tail[gdum])
    ge_w.append(np.full(int(gdum.sum()), INF, dtype=np.int64)); ge_e.append(dummy_eid[gdum])
    gev = np.concatenate(ge_v); get_ = np.concatenate(ge_t)
    gew = np.concatenate(ge_w); gee = np.concatenate(ge_e)
    gdum = (gew >= INF).astype(np.int8)
    gord = np.lexsort((get_, gee, gdum, gcp[gev]))
    gc_start = np.zeros(gc_sel.size + 1, dtype=np.int64)
    np.add.at(gc_start, gcp[gev] + 1, 1)
    np.cumsum(gc_start, out=gc_start)
    gc_real = np.zeros(gc_sel.size, dtype=np.int64)
    np.add.at(gc_real, gcp[gev][gdum == 0], 1)
    gc_mid = gc_start[:-1] + gc_real

    # per-cell selection graphs
    visited = np.zeros(n, dtype=np.int64)
    h_chunks, e_start_chunks, e_mid_chunks = [], [], []
    et_chunks, ew_chunks, ee_chunks, em_chunks = [], [], [], []
    h_sizes = np.zeros(k, dtype=np.int64)
    vstamp = np.int64(0)
    # group dummies by slot for quick per-cell lookup
    dum_by_cell_order = np.lexsort((dummy_eid, cell_of_edge[dummy_eid]))
    dum_cells = cell_of_edge[dummy_eid][dum_by_cell_order]
    dum_slot_s = dummy_slot[dum_by_cell_order]
    dum_tail_s = dummy_tail[dum_by_cell_order]
    dum_eid_s = dummy_eid[dum_by_cell_order]
    dum_cell_start = np.zeros(k + 1, dtype=np.int64)
    np.add.at(dum_cell_start, dum_cells + 1, 1)
    np.cumsum(dum_cell_start, out=dum_cell_start)

    pos2_i32 = pos2.astype(np.int32)
    dn_t_i32 = dn_t.astype(np.int32)
    for c in range(k):
        targets = cv_verts[cv_start[c]:cv_start[c + 1]]
        vstamp += 1
        sel, n_sel = PK.closure_kernel(
            pos2_i32, dn_start, dn_t_i32,
            targets.astype(np.int32), visited, vstamp,
        )
        sel = sel[np.argsort(pos2[sel], kind="stable")]
        keep_heads = sel[~topc[sel]].astype(np.int64)
        h_sizes[c] = keep_heads.size
        h_chunks.append(keep_heads)
        # entries: real downward entries per head + this cell's dummies
        lp = np.full(n, -1, dtype=np.int64)
        lp[keep_heads] = np.arange(keep_heads.size)
        starts = dn_start[pos2[keep_heads]]
        cnts = dn_start[pos2[keep_heads] + 1] - starts
        total = int(cnts.sum())
        idx = np.repeat(starts, cnts) + (
            np.arange(total) - np.repeat(np.cumsum(cnts) - cnts, cnts)
        )
        ent_v = [np.repeat(keep_heads, cnts)]
        ent_t = [dn_t[idx]]
        ent_w = [dn_w_[idx]]
        ent_e = [dn_e[idx]]
        dl, dh_ = dum_cell_start[c], dum_cell_start[c + 1]
        sl = dum_slot_s[dl:dh_]
        in_cell = ~topc[sl]
        ent_v.append(sl[in_cell])
        ent_t.append(dum_tail_s[dl:dh_][in_cell])
        ent_w.append(np.full(int(in_cell.sum()), INF, dtype=np.int64))
        ent_e.append(dum_eid_s[dl:dh_][in_cell])
        ev = np.concatenate(ent_v) if ent_v else np.empty(0, dtype=np.int64)
        etl = np.concatenate(ent_t) if ent_t else np.empty(0, dtype=np.int64)
        ewt = np.concatenate(ent_w) if ent_w else np.empty(0, dtype=np.int64)
        eei = np.concatenate(ent_e) if ent_e else np.empty(0, dtype=np.int64)
        edum = (ewt >= INF).astype(np.int8)
        eord = np.lexsort((etl, eei, edum, lp[ev]))
        ev, etl, ewt, eei = ev[eord], etl[eord], ewt[eord], eei[eord]
        emit = (eei >= 0) & (cell_of_edge[np.maximum(eei, 0)] == c)
        es = np.zeros(keep_heads.size + 1, dtype=np.int64)
        np.add.at(es, lp[ev] + 1, 1)
        np.cumsum(es, out=es)
        ereal = np.zeros(keep_heads.size, dtype=np.int64)
        np.add.at(ereal, lp[ev][ewt < INF], 1)
        e_mid_chunks.append(es[:-1] + ereal)
        e_start_chunks.append(es)
        et_chunks.append(etl)
        ew_chunks.append(ewt)
        ee_chunks.append(eei)
        em_chunks.append(emit.astype(np.uint8))

    h_start = np.zeros(k + 1, dtype=np.int64)
    h_start[1:] = np.cumsum(h_sizes)
    heads_all = (np.concatenate(h_chunks) if h_chunks
                 else np.empty(0, dtype=np.int64)).astype(np.int32)
    e_start = np.zeros(heads_all.size + 1, dtype=np.int64)
    e_mid = np.zeros(max(heads_all.size, 1), dtype=np.int64)
    off = 0
    eoff = 0
    for c in range(k):
        es = e_start_chunks[c]
        cnt = es.shape[0] - 1
        e_start[off:off + cnt + 1] = es + eoff
        e_mid[off:off + cnt] = e_mid_chunks[c] + eoff
        off += cnt
        eoff += int(es[-1])
    e_mid = e_mid[:heads_all.size]
    e_tail = (np.concatenate(et_chunks) if et_chunks
              else np.empty(0, dtype=np.int64)).astype(np.int32)
    e_w = (np.concatenate(ew_chunks) if ew_chunks
           else np.empty(0, dtype=np.int64)).astype(np.int64)
    e_eid = (np.concatenate(ee_chunks) if ee_chunks
             else np.empty(0, dtype=np.int64)).astype(np.int32)
    e_emit = (np.concatenate(em_chunks) if em_chunks
              else np.empty(0, dtype=np.uint8))

    vertex_home_cell = np.full(n, np.iinfo(np.int32).max, dtype=np.int64)
    np.minimum.at(vertex_home_cell, graph.edge_tail, cell_of_edge)
    np.minimum.at(vertex_home_cell, graph.fwd_head, cell_of_edge)

    inf32 = np.int64(2**31 - 1)

    def pack(tails, ws):
        return (tails.astype(np.int64) << 32) | np.minimum(ws, inf32)

    return DtData(
        base=base, C=C,
        bounds=DistanceBoundsTable(lower=lower, upper=upper),
        diameters=diameters,
        vertex_home_cell=vertex_home_cell.astype(np.int32),
        up_index=up_index, up_head=uh[uord].astype(np.int32), up_w=uw[uord],
        gc_heads=gc_sel.astype(np.int32), gc_start=gc_start, gc_mid=gc_mid,
        gc_tail=get_[gord].astype(np.int32), gc_w=gew[gord],
        gc_eid=gee[gord].astype(np.int32),
        gc_emit=(gee[gord] >= 0).astype(np.uint8),
        gc_pack=pack(get_[gord], gew[gord]),
        h_start=h_start, heads_all=heads_all,
        e_start=e_start, e_mid=e_mid, e_tail=e_tail, e_w=e_w, e_eid=e_eid,
        e_emit=e_emit,
        e_pack=pack(e_tail, e_w),
    )


INF32 = np.int32(2**31 - 1)


class DtEngine:
    """Distance-bounds strategy: exhaustive upward search, one bounds-row
    sweep to mark active cells, then restricted downward sweeps (shared
    compressed top first).  Labels live in per-thread int32 arrays that
    are reset once per query; sweeps read packed (tail, weight) entries."""

    name = "isophast-dt"

    def __init__(self, data: DtData):
        self.data = data
        self.base = data.base
        self._ctxs = [np.empty(self.base.n, dtype=np.int32)]
        self._pools: dict[int, ThreadPoolExecutor] = {}

    def _pool(self, threads):
        if threads not in self._pools:
            self._pools[threads] = ThreadPoolExecutor(max_workers=threads)
        return self._pools[threads]

    def _phase1(self, dist32, source):
        d = self.data
        dist32.fill(INF32)
        return PK.dt_phase1_kernel(d.up_index, d.up_head, d.up_w,
                                   np.int32(source), dist32)

    def _gc_sweep(self, dist32, tau, emit):
        d = self.data
        return PK.dt_sweep_kernel(
            d.gc_heads, np.int64(0), np.int64(d.gc_heads.size),
            d.gc_start, d.gc_mid, d.gc_pack, d.gc_eid, d.gc_emit,
            self.base.graph.edge_tail, self.base.graph.fwd_head,
            np.int64(tau), dist32, emit,
        )

    def _cell_sweep(self, dist32, c, tau):
        d = self.data
        return PK.dt_sweep_kernel(
            d.heads_all, np.int64(d.h_start[c]), np.int64(d.h_start[c + 1]),
            d.e_start, d.e_mid, d.e_pack, d.e_eid, d.e_emit,
            self.base.graph.edge_tail, self.base.graph.fwd_head,
            np.int64(tau), dist32, True,
        )

    def query(self, source: int, tau: int, threads: int = 1) -> QueryResult:
        d = self.data
        t0 = time.perf_counter()
        src = self.base.to_source(source)
        ci = int(d.vertex_home_cell[src])
        dist0 = self._ctxs[0]
        settled = self._phase1(dist0, src)
        actives = np.flatnonzero(
            (d.bounds.lower[ci] <= tau) & (tau < d.bounds.upper[ci])
        )
        t1 = time.perf_counter()
        gc_out = self._gc_sweep(dist0, tau, True)
        parts = [gc_out]
        swept = gc_out[3]
        if threads <= 1 or actives.size <= 1:
            for c in actives:
                p = self._cell_sweep(dist0, int(c), tau)
                parts.append(p)
                swept += p[3]
        else:
            while len(self._ctxs) < threads:
                self._ctxs.append(np.empty(self.base.n, dtype=np.int32))
            blocks = np.array_split(actives, threads)

            def run_block(args):
                ti, block = args
                dist32 = self._ctxs[ti]
                if ti > 0:
                    self._phase1(dist32, src)
                    self._gc_sweep(dist32, tau, False)
                return [self._cell_sweep(dist32, int(c), tau) for c in block]

            results = list(self._pool(threads).map(
                run_block, enumerate(blocks)
            ))
            for block_parts in results:
                for p in block_parts:
                    parts.append(p)
                    swept += p[3]
        t2 = time.perf_counter()
        return QueryResult(
            edges=_combine(parts, self.base.edge_origin),
            stats=QueryStats(
                settled=int(settled + swept),
                active_cells=int(actives.size),
                t_upward_ms=(t1 - t0) * 1e3,
                t_scan_ms=(t2 - t1) * 1e3,
                t_total_ms=(t2 - t0) * 1e3,
            ),
        )
