"""Two-phase multilevel isochrone queries over the overlay hierarchy."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _mld_kernels as K
from .customization import MldData
from .graph import INF
from .isodijkstra import IsochroneEdgeSet


@dataclass
class QueryStats:
    settled: int = 0
    active_cells: int = 0
    t_upward_ms: float = 0.0
    t_scan_ms: float = 0.0
    t_total_ms: float = 0.0


@dataclass
class QueryResult:
    edges: IsochroneEdgeSet
    stats: QueryStats


class MldQueryContext:
    """Versioned label arrays plus per-level cell flags for one engine."""

    def __init__(self, data: MldData):
        n = data.n
        self.dist = np.full(n, INF, dtype=np.int64)
        self.ver = np.zeros(n, dtype=np.int64)
        self.state = np.zeros(n, dtype=np.uint8)
        self.touched = np.empty(max(n, 1), dtype=np.int32)
        self.sweep_ver = np.zeros(n, dtype=np.int64)
        self.touch_ver = np.zeros(n, dtype=np.int64)
        total = data.total_cells()
        self.i_flag = np.zeros(max(total, 1), dtype=np.uint8)
        self.o_flag = np.zeros(max(total, 1), dtype=np.uint8)
        self.cur = np.int64(0)

    def begin_query(self):
        self.cur += 1
        self.i_flag[:] = 0
        self.o_flag[:] = 1
        return self.cur

    def label(self, v: int) -> int:
        return int(self.dist[v]) if self.ver[v] == self.cur else int(INF)


class _MldEngineBase:
    """Shared upward phase and descent scheduling for both multilevel
    engines."""

    name = "mld"

    def __init__(self, data: MldData):
        self.data = data
        self.ctx = MldQueryContext(data)
        self._pools: dict[int, ThreadPoolExecutor] = {}

    def _pool(self, threads: int) -> ThreadPoolExecutor:
        if threads not in self._pools:
            self._pools[threads] = ThreadPoolExecutor(max_workers=threads)
        return self._pools[threads]

    def _run_upward(self, source: int, tau: int, emit: bool):
        # `source` here is already an internal (permuted) id
        d, ctx = self.data, self.ctx
        cur = ctx.begin_query()
        ov = d.overlay
        edges, dirs, n_out, settled, n_touched = K.upward_kernel(
            d.graph.fwd_index, d.adj.lf_head, d.adj.lf_w, d.adj.lf_eid,
            d.adj.lf_cut,
            d.graph.rev_index, d.adj.lr_tail, d.adj.lr_eid, d.adj.lr_cut,
            d.L, d.cells_ln, d.boundary.boundary_level,
            ov.lvl_k0, ov.lvl_b0, ov.lvl_c0,
            ov.bstart_all, ov.bvert_all, ov.bpos_ln,
            ov.mat_off, ov.mat_all, ov.ecc_r_all, ov.ecc_u_all,
            ov.pair_start, ov.pair_pos,
            d.upward_check,
            np.int32(source), np.int64(tau),
            ctx.dist, ctx.ver, cur, ctx.state, ctx.touched,
            ctx.i_flag, ctx.o_flag,
            emit,
        )
        return edges[:n_out], dirs[:n_out], settled, n_touched

    def _descent_roots(self, source: int) -> list[tuple[int, int]]:
        """Active cells whose boundary labels are final after the phases
        processed so far: top-level actives plus active non-ancestor
        subcells of every source-ancestor cell."""
        d, ctx = self.data, self.ctx
        ov = d.overlay
        L, n = d.L, d.n
        roots: list[tuple[int, int]] = []

        def active(level, cell):
            ki = int(ov.lvl_k0[level - 1]) + int(cell)
            return ctx.i_flag[ki] == 1 and ctx.o_flag[ki] == 1

        src_cell = [int(d.cells_ln[(l - 1) * n + source]) for l in range(1, L + 1)]
        for c in range(d.partition.counts[L - 1]):
            if c != src_cell[L - 1] and active(L, c):
                roots.append((L, c))
        for l in range(L, 1, -1):
            row = int(ov.lvl_c0[l - 1]) + src_cell[l - 1]
            for j in range(int(d.ch_start[row]), int(d.ch_start[row + 1])):
                sc = int(d.ch_cell[j])
                if sc != src_cell[l - 2] and active(l - 1, sc):
                    roots.append((l - 1, sc))
        return roots

    def _run_descent(self, roots, tau, threads):
        if not roots:
            return [], 0, 0
        if threads <= 1:
            parts = [self._descend_one(lv, c, tau) for lv, c in roots]
        else:
            pool = self._pool(threads)
            parts = list(pool.map(
                lambda rc: self._descend_one(rc[0], rc[1], tau), roots
            ))
        settled = sum(p[3] for p in parts)
        swept = sum(p[4] for p in parts)
        chunks = [(p[0][:p[2]], p[1][:p[2]]) for p in parts]
        return chunks, settled, swept

    def query(self, source: int, tau: int, threads: int = 1) -> QueryResult:
        raise NotImplementedError


class IsoCrpEngine(_MldEngineBase):
    """Upward isochrone search, then per-active-cell searches on the
    level-below search graphs, descending level by level."""

    name = "isocrp"

    def _descend_one(self, level, cell, tau):
        d, ctx = self.data, self.ctx
        ov = d.overlay
        stamp_base = np.int64(ctx.cur) * np.int64(d.flag_stride)
        return K.crp_descend_kernel(
            np.int64(level), np.int64(cell),
            d.graph.fwd_index, d.adj.lf_head, d.adj.lf_w, d.adj.lf_eid,
            d.adj.lf_cut,
            d.graph.rev_index, d.adj.lr_tail, d.adj.lr_eid, d.adj.lr_cut,
            d.L, d.cells_ln, d.boundary.boundary_level,
            ov.lvl_k0, ov.lvl_b0, ov.lvl_c0,
            ov.bstart_all, ov.bvert_all, ov.bpos_ln,
            ov.mat_off, ov.mat_all, ov.ecc_r_all, ov.ecc_u_all,
            ov.pair_start, ov.pair_pos,
            d.scan_check,
            d.ch_start, d.ch_cell,
            np.int64(tau),
            ctx.dist, ctx.ver, ctx.cur, ctx.sweep_ver, ctx.touch_ver,
            stamp_base,
            ctx.i_flag, ctx.o_flag,
        )

    def upward_phase(self, source: int, tau: int):
        """First query phase alone: distance labels, cell flags, and the
        edges already found (top-level and source-cell edges)."""
        src = self.data.to_source(source)
        edges, dirs, settled, _ = self._run_upward(src, tau, emit=True)
        partial = IsochroneEdgeSet.from_buffers(
            self.data.edge_origin[np.asarray(edges, dtype=np.int64)], dirs
        )
        return self.ctx, (self.ctx.i_flag.copy(), self.ctx.o_flag.copy()), partial

    def query(self, source: int, tau: int, threads: int = 1) -> QueryResult:
        t0 = time.perf_counter()
        src = self.data.to_source(source)
        edges_up, dirs_up, settled_up, _ = self._run_upward(src, tau, emit=True)
        t1 = time.perf_counter()
        roots = self._descent_roots(src)
        chunks, settled_dn, swept = self._run_descent(roots, tau, threads)
        t2 = time.perf_counter()
        all_edges = np.concatenate([edges_up] + [c[0] for c in chunks]) \
            if chunks else edges_up
        all_dirs = np.concatenate([dirs_up] + [c[1] for c in chunks]) \
            if chunks else dirs_up
        result = IsochroneEdgeSet.from_buffers(
            self.data.edge_origin[np.asarray(all_edges, dtype=np.int64)],
            all_dirs,
        )
        stats = QueryStats(
            settled=int(settled_up + settled_dn),
            active_cells=int(swept),
            t_upward_ms=(t1 - t0) * 1e3,
            t_scan_ms=(t2 - t1) * 1e3,
            t_total_ms=(t2 - t0) * 1e3,
        )
        return QueryResult(edges=result, stats=stats)


class IsoGraspEngine(_MldEngineBase):
    """Multilevel queries whose downward phase is a linear sweep over
    precomputed downward edges instead of per-cell searches."""

    name = "isograsp"

    def __init__(self, data: MldData):
        if data.grasp is None:
            raise ValueError("downward graph missing: run build_grasp_downward")
        super().__init__(data)

    def _descend_one(self, level, cell, tau):
        d, ctx = self.data, self.ctx
        ov = d.overlay
        g = d.grasp
        return K.grasp_descend_kernel(
            np.int64(level), np.int64(cell),
            d.graph.edge_tail, d.graph.fwd_head,
            d.L, d.cells_ln, d.boundary.boundary_level,
            ov.lvl_k0, ov.lvl_b0, ov.lvl_c0,
            ov.bstart_all, ov.bvert_all, ov.bpos_ln,
            ov.mat_off, ov.mat_all, ov.ecc_r_all, ov.ecc_u_all,
            ov.pair_start, ov.pair_pos,
            d.scan_check,
            g.gcs_all, g.gverts_all, g.gestart_all, g.gsrc_all, g.glen_all,
            g.scs_all, g.sedge_all,
            d.ch_start, d.ch_cell,
            np.int64(tau),
            ctx.dist, ctx.ver, ctx.cur,
            ctx.i_flag, ctx.o_flag,
        )

    def _scan_fixed_lists(self, source, tau, n_touched):
        """Edges owned by the top group and by the source-ancestor cells,
        found by scanning the incident edges of in-range touched vertices;
        all their endpoint labels are final after the upward phase."""
        d, ctx = self.data, self.ctx
        g = d.grasp
        ov = d.overlay
        anc_rows = np.array([
            int(ov.lvl_c0[l - 1]) + int(d.cells_ln[(l - 1) * d.n + source])
            for l in range(1, d.L + 1)
        ], dtype=np.int64)
        out_e, out_d, n_out = K.scan_touched_kernel(
            ctx.touched, np.int64(n_touched),
            d.graph.fwd_index, d.graph.fwd_head,
            d.graph.rev_index, d.graph.rev_tail, d.graph.rev_edge_id,
            g.edge_home, anc_rows, np.int64(-1),
            np.int64(tau), ctx.dist, ctx.ver, ctx.cur,
        )
        return out_e[:n_out], out_d[:n_out]

    def query(self, source: int, tau: int, threads: int = 1) -> QueryResult:
        t0 = time.perf_counter()
        src = self.data.to_source(source)
        _, _, settled_up, n_touched = self._run_upward(src, tau, emit=False)
        edges_up, dirs_up = self._scan_fixed_lists(src, tau, n_touched)
        t1 = time.perf_counter()
        roots = self._descent_roots(src)
        chunks, settled_dn, swept = self._run_descent(roots, tau, threads)
        t2 = time.perf_counter()
        all_edges = np.concatenate([edges_up] + [c[0] for c in chunks]) \
            if chunks else edges_up
        all_dirs = np.concatenate([dirs_up] + [c[1] for c in chunks]) \
            if chunks else dirs_up
        result = IsochroneEdgeSet.from_buffers(
            self.data.edge_origin[np.asarray(all_edges, dtype=np.int64)],
            all_dirs,
        )
        stats = QueryStats(
            settled=int(settled_up + settled_dn),
            active_cells=int(swept),
            t_upward_ms=(t1 - t0) * 1e3,
            t_scan_ms=(t2 - t1) * 1e3,
            t_total_ms=(t2 - t0) * 1e3,
        )
        return QueryResult(edges=result, stats=stats)


def grasp_one_to_all(engine: IsoGraspEngine, source: int) -> np.ndarray:
    """Distances to every vertex (original ids): exhaustive upward
    phase, then unconditional downward sweeps over every non-ancestor
    cell in descending level order."""
    d = engine.data
    ctx = engine.ctx
    src = d.to_source(source)
    engine._run_upward(src, int(INF) - 1, emit=False)
    g = d.grasp
    rows = []
    for l in range(d.L, 0, -1):
        src_cell = int(d.cells_ln[(l - 1) * d.n + src])
        base = int(d.overlay.lvl_c0[l - 1])
        rows.extend(base + c for c in range(d.partition.counts[l - 1])
                    if c != src_cell)
    K.grasp_sweep_rows_kernel(
        np.array(rows, dtype=np.int64),
        g.gcs_all, g.gverts_all, g.gestart_all, g.gsrc_all, g.glen_all,
        ctx.dist, ctx.ver, ctx.cur,
    )
    out = np.full(d.n, INF, dtype=np.int64)
    valid = ctx.ver == ctx.cur
    out[valid] = ctx.dist[valid]
    return out[d.perm.new_id_of]
