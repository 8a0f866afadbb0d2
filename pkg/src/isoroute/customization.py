"""Metric customization for the multilevel query engines.

Builds, for a fixed nested partition, the per-cell clique matrices with
eccentricity columns (all checking variants), the unreachable-pair index,
and optionally the linear-sweep downward graph with its per-cell edge
scan lists.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from . import _mld_kernels as K
from ._mld_kernels import CHECK_MATRIX, CHECK_SEP, CHECK_SIMPLE
from .graph import INF, Permutation, RoadGraph, apply_permutation
from .partition import (
    BoundaryInfo,
    MultilevelPartition,
    PartitionError,
    compute_boundary_info,
    crp_vertex_order,
)

ECC_MODES = ("none", "all", "inf", "scc", "up", "updown", "sep")

# which check each query phase uses, per mode
_UPWARD_CHECK = {
    "none": CHECK_SIMPLE, "all": CHECK_SIMPLE, "inf": CHECK_SIMPLE,
    "scc": CHECK_SIMPLE, "up": CHECK_MATRIX, "updown": CHECK_MATRIX,
    "sep": CHECK_SEP,
}
_SCAN_CHECK = {
    "none": CHECK_SIMPLE, "all": CHECK_SIMPLE, "inf": CHECK_SIMPLE,
    "scc": CHECK_SIMPLE, "up": CHECK_SIMPLE, "updown": CHECK_MATRIX,
    "sep": CHECK_SEP,
}


def _thread_count(threads: int | None) -> int:
    if threads is None or threads <= 0:
        return min(os.cpu_count() or 1, 8)
    return threads


@dataclass
class LeveledAdjacency:
    """Forward/reverse adjacency re-sorted per vertex by descending edge
    crossing level, with per-vertex cut offsets per level."""

    lf_head: np.ndarray
    lf_w: np.ndarray
    lf_eid: np.ndarray
    lf_cut: np.ndarray  # int64[n*(L+2)]
    lr_tail: np.ndarray
    lr_w: np.ndarray
    lr_eid: np.ndarray
    lr_cut: np.ndarray


def build_leveled_adjacency(graph: RoadGraph, edge_level: np.ndarray, L: int
                            ) -> LeveledAdjacency:
    n, m = graph.n, graph.m
    stride = L + 2

    def one_side(index, other_end, eids):
        order = np.lexsort((eids, -edge_level[eids],
                            np.repeat(np.arange(n), np.diff(index))))
        s_end = other_end[order] if other_end is not None else None
        s_eid = eids[order]
        lvl = edge_level[s_eid]
        cut = np.empty(n * stride, dtype=np.int64)
        owners = np.repeat(np.arange(n), np.diff(index))
        for j in range(stride):
            # end position of edges with level >= j per vertex
            cnt = np.zeros(n, dtype=np.int64)
            np.add.at(cnt, owners[lvl >= j], 1)
            cut[j::stride] = index[:-1] + cnt
        return s_end, s_eid, cut

    fwd_eids = np.arange(m, dtype=np.int64)
    f_end, f_eid, f_cut = one_side(graph.fwd_index, graph.fwd_head, fwd_eids)
    r_end, r_eid, r_cut = one_side(
        graph.rev_index, graph.rev_tail, graph.rev_edge_id.astype(np.int64)
    )
    return LeveledAdjacency(
        lf_head=f_end.astype(np.int32),
        lf_w=graph.fwd_weight[f_eid],
        lf_eid=f_eid.astype(np.int32),
        lf_cut=f_cut,
        lr_tail=r_end.astype(np.int32),
        lr_w=graph.fwd_weight[r_eid],
        lr_eid=r_eid.astype(np.int32),
        lr_cut=r_cut,
    )


@dataclass
class OverlayHierarchy:
    """Flattened per-level overlays: boundary lists grouped by cell,
    clique matrices in contiguous row-major storage, and the two
    eccentricity columns (restricted bound, unrestricted bound)."""

    L: int
    lvl_k0: np.ndarray  # int64[L+1], flag-index offsets per level
    lvl_b0: np.ndarray  # int64[L+1], boundary-position offsets
    lvl_c0: np.ndarray  # int64[L+1], bstart row offsets
    bstart_all: np.ndarray  # int64, per-level local CSR over cells
    bvert_all: np.ndarray  # int32
    bpos_ln: np.ndarray  # int32[L*n], global boundary position per (level, vertex)
    mat_off: np.ndarray  # int64[sum k_l], offset of each cell's matrix
    mat_all: np.ndarray  # int64
    ecc_r_all: np.ndarray  # int64, restricted eccentricity bound
    ecc_u_all: np.ndarray  # int64, unrestricted bound (INF if unusable)
    pair_start: np.ndarray  # int64[sum B + 1]
    pair_pos: np.ndarray  # int32

    def cell_matrix(self, level: int, cell: int) -> np.ndarray:
        row0 = self.lvl_c0[level - 1] + cell
        bc = int(self.bstart_all[row0 + 1] - self.bstart_all[row0])
        off = int(self.mat_off[self.lvl_k0[level - 1] + cell])
        return self.mat_all[off:off + bc * bc].reshape(bc, bc)

    def cell_boundary(self, level: int, cell: int) -> np.ndarray:
        row0 = self.lvl_c0[level - 1] + cell
        lo = self.lvl_b0[level - 1] + self.bstart_all[row0]
        hi = self.lvl_b0[level - 1] + self.bstart_all[row0 + 1]
        return self.bvert_all[lo:hi]

    def cell_ecc(self, level: int, cell: int, restricted: bool = True
                 ) -> np.ndarray:
        row0 = self.lvl_c0[level - 1] + cell
        lo = self.lvl_b0[level - 1] + self.bstart_all[row0]
        hi = self.lvl_b0[level - 1] + self.bstart_all[row0 + 1]
        arr = self.ecc_r_all if restricted else self.ecc_u_all
        return arr[lo:hi]


@dataclass
class GraspDownwardGraph:
    """Per-cell internal vertices (ascending order) with reduced incoming
    downward edges, plus per-cell edge scan lists and the top-level list."""

    gcs_all: np.ndarray  # int64, lvl_c0-indexed rows -> gverts slices
    gverts_all: np.ndarray  # int32
    gestart_all: np.ndarray  # int64[len(gverts_all)+1]
    gsrc_all: np.ndarray  # int32
    glen_all: np.ndarray  # int64
    scs_all: np.ndarray  # int64, lvl_c0-indexed rows -> sedge slices
    sedge_all: np.ndarray  # int32
    top_edges: np.ndarray  # int32, edges owned by the top group
    edge_home: np.ndarray = field(default=None)  # int64[m]: owner row, -1 = top


@dataclass
class MldData:
    """Everything the multilevel engines need for one (graph, partition,
    metric, mode) combination.

    All structures live in the boundary-first vertex order (`perm`):
    boundary labels of a cell occupy consecutive entries, so clique-row
    relaxations are linear passes.  `graph` is the permuted graph;
    queries translate sources in and edge ids back out."""

    graph: RoadGraph  # permuted
    orig_graph: RoadGraph
    perm: "Permutation"
    edge_origin: np.ndarray  # int32[m]: permuted edge id -> original edge id
    partition: MultilevelPartition  # permuted vertex ids
    boundary: BoundaryInfo
    adj: LeveledAdjacency
    overlay: OverlayHierarchy
    cells_ln: np.ndarray  # int32[L*n]
    ch_start: np.ndarray  # children CSR (lvl_c0-indexed; levels >= 2)
    ch_cell: np.ndarray
    mode: str
    grasp: GraspDownwardGraph | None = None
    flag_stride: int = field(default=0)

    @property
    def L(self) -> int:
        return self.partition.levels

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def upward_check(self) -> int:
        return _UPWARD_CHECK[self.mode]

    @property
    def scan_check(self) -> int:
        return _SCAN_CHECK[self.mode]

    def total_cells(self) -> int:
        return int(self.overlay.lvl_k0[-1])

    def to_source(self, v: int) -> int:
        """Original vertex id -> internal id."""
        return int(self.perm.new_id_of[v])

    def to_original_vertices(self, vs) -> np.ndarray:
        return self.perm.inverse[np.asarray(vs, dtype=np.int64)]

    def label_of(self, ctx, v: int) -> int:
        """Distance label of an original vertex after a query."""
        return ctx.label(int(self.perm.new_id_of[v]))


def _children_csr(mlp: MultilevelPartition, lvl_c0: np.ndarray
                  ) -> tuple[np.ndarray, np.ndarray]:
    total_rows = int(lvl_c0[-1])
    ch_start = np.zeros(total_rows + 1, dtype=np.int64)
    chunks = []
    sizes = np.zeros(total_rows, dtype=np.int64)
    for level in range(2, mlp.levels + 1):
        start, order = mlp.children_csr(level)
        for c in range(mlp.counts[level - 1]):
            row = int(lvl_c0[level - 1]) + c
            kids = order[start[c]:start[c + 1]]
            sizes[row] = kids.size
            chunks.append(kids)
    ch_start[1:] = np.cumsum(sizes)
    ch_cell = (np.concatenate(chunks).astype(np.int32)
               if chunks else np.empty(0, dtype=np.int32))
    return ch_start, ch_cell


def customize(
    graph: RoadGraph,
    mlp: MultilevelPartition,
    mode: str = "sep",
    threads: int | None = None,
) -> MldData:
    """Compute clique matrices and eccentricity columns for every level,
    bottom-up, cells of a level in parallel.  For modes all/inf/scc the
    unrestricted column is then refined."""
    if mode not in ECC_MODES:
        raise ValueError(f"unknown ecc mode {mode!r}")
    if mlp.n != graph.n:
        raise PartitionError("partition size does not match graph")
    orig_graph = graph
    perm = crp_vertex_order(mlp, compute_boundary_info(graph, mlp))
    edge_origin = np.lexsort((
        perm.new_id_of[graph.fwd_head], perm.new_id_of[graph.edge_tail]
    )).astype(np.int32)
    graph = apply_permutation(graph, perm)
    mlp = MultilevelPartition(cells=mlp.cells[:, perm.inverse],
                              counts=list(mlp.counts))
    boundary = compute_boundary_info(graph, mlp)
    L, n = mlp.levels, graph.n
    adj = build_leveled_adjacency(graph, boundary.edge_level, L)
    cells_ln = np.ascontiguousarray(mlp.cells).reshape(L * n).astype(np.int32)

    lvl_k0 = np.zeros(L + 1, dtype=np.int64)
    lvl_b0 = np.zeros(L + 1, dtype=np.int64)
    lvl_c0 = np.zeros(L + 1, dtype=np.int64)
    for l in range(1, L + 1):
        lvl_k0[l] = lvl_k0[l - 1] + mlp.counts[l - 1]
        lvl_b0[l] = lvl_b0[l - 1] + boundary.bvert[l - 1].size
        lvl_c0[l] = lvl_c0[l - 1] + mlp.counts[l - 1] + 1

    bstart_all = np.concatenate([boundary.bstart[l - 1] for l in range(1, L + 1)])
    bvert_all = np.concatenate(
        [boundary.bvert[l - 1] for l in range(1, L + 1)]
    ).astype(np.int32) if int(lvl_b0[-1]) else np.empty(0, dtype=np.int32)

    bpos_ln = np.full(L * n, -1, dtype=np.int32)
    for l in range(1, L + 1):
        verts = boundary.bvert[l - 1]
        bpos_ln[(l - 1) * n + verts] = (
            np.arange(verts.size, dtype=np.int32) + int(lvl_b0[l - 1])
        )

    # matrix offsets
    mat_off = np.zeros(int(lvl_k0[-1]), dtype=np.int64)
    total = 0
    for l in range(1, L + 1):
        bs = boundary.bstart[l - 1]
        bcs = np.diff(bs)
        for c in range(mlp.counts[l - 1]):
            mat_off[int(lvl_k0[l - 1]) + c] = total
            total += int(bcs[c]) ** 2
    mat_all = np.full(total, INF, dtype=np.int64)
    ecc_r_all = np.zeros(int(lvl_b0[-1]), dtype=np.int64)
    ecc_u_all = np.zeros(int(lvl_b0[-1]), dtype=np.int64)

    nthreads = _thread_count(threads)
    import numba

    numba.set_num_threads(max(1, min(nthreads, numba.config.NUMBA_NUM_THREADS)))
    sdist = np.zeros((nthreads, n), dtype=np.int64)
    sver = np.zeros((nthreads, n), dtype=np.int64)
    scounter = np.zeros(nthreads, dtype=np.int64)

    for l in range(1, L + 1):
        cells_l = mlp.level_cells(l)
        if l == 1:
            subcount = np.bincount(cells_l, minlength=mlp.counts[0]).astype(np.int64)
        else:
            prev_b = boundary.bvert[l - 2]
            subcount = np.bincount(
                cells_l[prev_b], minlength=mlp.counts[l - 1]
            ).astype(np.int64)
        K.customize_level_kernel(
            l, n, L, cells_ln,
            graph.fwd_index, adj.lf_head, adj.lf_w, adj.lf_cut,
            mlp.counts[l - 1], boundary.bstart[l - 1], boundary.bvert[l - 1],
            mat_off[int(lvl_k0[l - 1]):int(lvl_k0[l])], subcount,
            int(lvl_b0[l - 1]),
            lvl_k0, lvl_b0, lvl_c0, bstart_all, bvert_all, bpos_ln,
            mat_off, mat_all,
            mat_all, ecc_r_all, ecc_u_all,
            sdist, sver, scounter,
        )

    if mode in ("all", "inf", "scc"):
        _refine(graph, mlp, boundary, mode, cells_ln, lvl_b0, lvl_c0, lvl_k0,
                mat_off, mat_all, ecc_u_all)

    # unreachable-pair index, used by the sep variant's checks
    pair_start = np.zeros(int(lvl_b0[-1]) + 1, dtype=np.int64)
    pair_chunks = []
    if mode == "sep":
        counts = np.zeros(int(lvl_b0[-1]), dtype=np.int64)
        for l in range(1, L + 1):
            bs = boundary.bstart[l - 1]
            for c in range(mlp.counts[l - 1]):
                bc = int(bs[c + 1] - bs[c])
                if bc == 0:
                    continue
                off = int(mat_off[int(lvl_k0[l - 1]) + c])
                block = mat_all[off:off + bc * bc].reshape(bc, bc)
                first = int(lvl_b0[l - 1] + bs[c])
                rows, cols = np.nonzero(block >= INF)  # row-major order
                counts[first:first + bc] = np.bincount(rows, minlength=bc)
                pair_chunks.append((first + cols).astype(np.int32))
        pair_start[1:] = np.cumsum(counts)
    pair_pos = (np.concatenate(pair_chunks).astype(np.int32)
                if pair_chunks else np.empty(0, dtype=np.int32))

    overlay = OverlayHierarchy(
        L=L, lvl_k0=lvl_k0, lvl_b0=lvl_b0, lvl_c0=lvl_c0,
        bstart_all=bstart_all, bvert_all=bvert_all, bpos_ln=bpos_ln,
        mat_off=mat_off, mat_all=mat_all,
        ecc_r_all=ecc_r_all, ecc_u_all=ecc_u_all,
        pair_start=pair_start, pair_pos=pair_pos,
    )
    ch_start, ch_cell = _children_csr(mlp, lvl_c0)
    return MldData(
        graph=graph, orig_graph=orig_graph, perm=perm,
        edge_origin=edge_origin, partition=mlp, boundary=boundary,
        adj=adj, overlay=overlay,
        cells_ln=cells_ln, ch_start=ch_start, ch_cell=ch_cell,
        mode=mode, flag_stride=int(lvl_k0[-1]) + 1,
    )


def _refine(graph, mlp, boundary, mode, cells_ln, lvl_b0, lvl_c0, lvl_k0,
            mat_off, mat_all, ecc_u_all):
    n = graph.n
    dist = np.zeros(n, dtype=np.int64)
    dver = np.zeros(n, dtype=np.int64)
    counter = np.zeros(1, dtype=np.int64)
    for l in range(1, mlp.levels + 1):
        member_count = np.bincount(
            mlp.level_cells(l), minlength=mlp.counts[l - 1]
        ).astype(np.int64)
        K.refine_ecc_kernel(
            l, n, mode == "all", mode == "scc",
            cells_ln,
            graph.fwd_index, graph.fwd_head, graph.fwd_weight,
            mlp.counts[l - 1], boundary.bstart[l - 1], boundary.bvert[l - 1],
            member_count, int(lvl_b0[l - 1]),
            lvl_b0, lvl_c0,
            mat_off[int(lvl_k0[l - 1]):int(lvl_k0[l])], mat_all,
            ecc_u_all,
            dist, dver, counter,
        )


def refine_eccentricities(data: MldData, mode: str) -> MldData:
    """Replace the unrestricted-bound column per the given variant.
    Valid only for overlays built with unrestricted-bound semantics."""
    if mode not in ("all", "inf", "scc"):
        raise ValueError(f"refinement mode must be all/inf/scc, got {mode!r}")
    if data.mode in ("updown", "sep", "up"):
        raise ValueError(
            f"overlay built with mode {data.mode!r} does not use the "
            "unrestricted column in its checks"
        )
    _refine(data.graph, data.partition, data.boundary, mode, data.cells_ln,
            data.overlay.lvl_b0, data.overlay.lvl_c0, data.overlay.lvl_k0,
            data.overlay.mat_off, data.overlay.mat_all,
            data.overlay.ecc_u_all)
    data.mode = mode
    return data


def build_grasp_downward(data: MldData, threads: int | None = None) -> MldData:
    """Add the linear-sweep downward graph: reduced boundary-to-internal
    edges per cell, per-cell edge scan lists, and the top-level list."""
    graph, mlp, boundary = data.graph, data.partition, data.boundary
    L, n = data.L, data.n
    ov = data.overlay
    bl = boundary.boundary_level

    nthreads = _thread_count(threads)
    sdist = np.zeros((nthreads, n), dtype=np.int64)
    sver = np.zeros((nthreads, n), dtype=np.int64)
    scounter = np.zeros(nthreads, dtype=np.int64)

    total_rows = int(ov.lvl_c0[-1])
    gcs_all = np.zeros(total_rows + 1, dtype=np.int64)
    gverts_chunks = []
    gsrc_chunks, glen_chunks, gcnt_chunks = [], [], []
    row_sizes = np.zeros(total_rows, dtype=np.int64)

    for l in range(1, L + 1):
        cells_l = mlp.level_cells(l)
        internal = np.flatnonzero(bl == l - 1).astype(np.int32)
        cell_of_int = cells_l[internal]
        order2 = np.argsort(cell_of_int, kind="stable")
        internal = internal[order2]
        cell_of_int = cell_of_int[order2]
        k_l = mlp.counts[l - 1]
        gcs_l = np.zeros(k_l + 1, dtype=np.int64)
        np.add.at(gcs_l, cell_of_int.astype(np.int64) + 1, 1)
        np.cumsum(gcs_l, out=gcs_l)
        gidx_of = np.full(n, -1, dtype=np.int64)
        for c in range(k_l):
            seg = internal[gcs_l[c]:gcs_l[c + 1]]
            gidx_of[seg] = np.arange(seg.size, dtype=np.int64)
        bs = boundary.bstart[l - 1]
        bcs = np.diff(bs)
        icounts = np.diff(gcs_l)
        raw_off = np.zeros(k_l, dtype=np.int64)
        tot = 0
        for c in range(k_l):
            raw_off[c] = tot
            tot += int(bcs[c]) * int(icounts[c])
        raw = np.full(tot, INF, dtype=np.int64)
        if tot:
            K.grasp_collect_kernel(
                l, n, L, data.cells_ln,
                graph.fwd_index, data.adj.lf_head, data.adj.lf_w, data.adj.lf_cut,
                k_l, bs, boundary.bvert[l - 1],
                gcs_l, internal, gidx_of,
                raw_off, raw,
                ov.lvl_k0, ov.lvl_b0, ov.lvl_c0, ov.bstart_all, ov.bvert_all,
                ov.bpos_ln, ov.mat_off, ov.mat_all,
                sdist, sver, scounter,
            )
            keep = np.zeros(tot, dtype=np.uint8)
            K.grasp_reduce_kernel(
                k_l, bs, gcs_l, raw_off, raw,
                ov.mat_off[int(ov.lvl_k0[l - 1]):int(ov.lvl_k0[l])],
                ov.mat_all, keep,
            )
        # assemble per-internal-vertex CSR in ascending vertex order
        for c in range(k_l):
            row = int(ov.lvl_c0[l - 1]) + c
            seg = internal[gcs_l[c]:gcs_l[c + 1]]
            row_sizes[row] = seg.size
            gverts_chunks.append(seg)
            bcc = int(bcs[c])
            icc = seg.size
            if icc == 0 or bcc == 0:
                gcnt_chunks.append(np.zeros(icc, dtype=np.int64))
                continue
            block_keep = keep[raw_off[c]:raw_off[c] + bcc * icc].reshape(bcc, icc)
            block_raw = raw[raw_off[c]:raw_off[c] + bcc * icc].reshape(bcc, icc)
            srcs = boundary.bvert[l - 1][bs[c]:bs[c + 1]]
            j_idx, i_idx = np.nonzero(block_keep.T)
            gcnt_chunks.append(np.bincount(j_idx, minlength=icc).astype(np.int64))
            gsrc_chunks.append(srcs[i_idx].astype(np.int32))
            glen_chunks.append(block_raw.T[j_idx, i_idx])

    gcs_all[1:] = np.cumsum(row_sizes)
    gverts_all = (np.concatenate(gverts_chunks).astype(np.int32)
                  if gverts_chunks else np.empty(0, dtype=np.int32))
    gestart_all = np.zeros(gverts_all.size + 1, dtype=np.int64)
    if gcnt_chunks:
        gestart_all[1:] = np.cumsum(np.concatenate(gcnt_chunks))
    gsrc_all = (np.concatenate(gsrc_chunks).astype(np.int32)
                if gsrc_chunks else np.empty(0, dtype=np.int32))
    glen_all = (np.concatenate(glen_chunks).astype(np.int64)
                if glen_chunks else np.empty(0, dtype=np.int64))

    # scan lists: every original edge is owned by its higher-index endpoint;
    # its home row is that endpoint's cell one level above its boundary level
    tails = graph.edge_tail.astype(np.int64)
    heads = graph.fwd_head.astype(np.int64)
    owner = np.maximum(tails, heads)
    mb = np.minimum(bl[tails], bl[heads]).astype(np.int64)
    eids = np.arange(graph.m, dtype=np.int64)
    mask = mb < L
    rows = ov.lvl_c0[mb[mask]] + data.cells_ln[mb[mask] * n + owner[mask]]
    order = np.lexsort((eids[mask], owner[mask], rows))
    sedge_all = eids[mask][order].astype(np.int32)
    scs_all = np.zeros(total_rows + 1, dtype=np.int64)
    np.add.at(scs_all, rows + 1, 1)
    np.cumsum(scs_all, out=scs_all)
    top_edges = eids[mb == L]
    top_edges = top_edges[np.lexsort((top_edges, owner[mb == L]))]
    edge_home = np.full(graph.m, -1, dtype=np.int64)
    edge_home[mask] = rows

    data.grasp = GraspDownwardGraph(
        gcs_all=gcs_all, gverts_all=gverts_all, gestart_all=gestart_all,
        gsrc_all=gsrc_all, glen_all=glen_all,
        scs_all=scs_all, sedge_all=sedge_all,
        top_edges=top_edges.astype(np.int32),
        edge_home=edge_home,
    )
    return data
