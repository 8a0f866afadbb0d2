"""Contraction-hierarchy kernel: witness-search contraction (full or
core-preserving), level assignment, level-order sweeps, target selection,
and forward/multi-source upward searches."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _ch_kernels as CK
from .graph import INF, RoadGraph

# staged witness-search budgets: (hop cap, settle cap) while under 90 %
# contracted, then a looser stage for the dense end game
DEFAULT_HOP_CAPS = (8, 16)
DEFAULT_SETTLE_CAPS = (300, 2000)


@dataclass
class CoreGraph:
    """Uncontracted vertices plus the shortcuts added among them."""

    members: np.ndarray  # int32, ascending vertex ids
    tails: np.ndarray
    heads: np.ndarray
    weights: np.ndarray
    is_shortcut: np.ndarray  # bool per edge


@dataclass
class ContractionData:
    """Full-hierarchy search structures over the original vertex ids.

    The downward graph is stored grouped by head in sweep order
    (descending level), so a single pass over `dn_order` with incoming
    scans is the one-to-all scanning phase."""

    graph: RoadGraph
    rank: np.ndarray  # int32[n], total order
    level: np.ndarray  # int32[n]
    up_index: np.ndarray
    up_head: np.ndarray
    up_w: np.ndarray
    dn_order: np.ndarray  # int32[n], sweep order (descending level)
    dn_pos: np.ndarray  # int32[n], position of vertex in dn_order
    dn_start: np.ndarray  # int64[n+1] per position
    dn_tail: np.ndarray
    dn_w: np.ndarray
    n_shortcuts: int = 0

    @property
    def n(self) -> int:
        return self.graph.n


def contract(
    graph: RoadGraph,
    keep: np.ndarray | None = None,
    hop_caps=DEFAULT_HOP_CAPS,
    settle_caps=DEFAULT_SETTLE_CAPS,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray, CoreGraph]:
    """Contract all vertices outside `keep` in heuristic priority order.

    Returns (rank, level, sc_tails, sc_heads, sc_weights, core).  rank is
    -1 for kept vertices; the core graph holds the kept vertices with the
    surviving original keep-keep edges plus added shortcuts.
    """
    n = graph.n
    keep_mask = np.zeros(n, dtype=np.uint8)
    if keep is not None and len(keep):
        keep_mask[np.asarray(keep, dtype=np.int64)] = 1
    rank, level, sc_t, sc_h, sc_w, n_sc = CK.contract_kernel(
        n,
        graph.edge_tail.astype(np.int32),
        graph.fwd_head.astype(np.int32),
        graph.fwd_weight,
        keep_mask,
        np.asarray(hop_caps, dtype=np.int64),
        np.asarray(settle_caps, dtype=np.int64),
        np.asarray([0.9, 1.0]),
    )
    members = np.flatnonzero(keep_mask == 1).astype(np.int32)
    in_core = keep_mask == 1
    orig_keep = in_core[graph.edge_tail] & in_core[graph.fwd_head]
    core = CoreGraph(
        members=members,
        tails=np.concatenate([graph.edge_tail[orig_keep], sc_t[:n_sc]]),
        heads=np.concatenate([graph.fwd_head[orig_keep], sc_h[:n_sc]]),
        weights=np.concatenate([graph.fwd_weight[orig_keep], sc_w[:n_sc]]),
        is_shortcut=np.concatenate([
            np.zeros(int(orig_keep.sum()), dtype=bool),
            np.ones(n_sc, dtype=bool),
        ]),
    )
    return rank, level, sc_t[:n_sc], sc_h[:n_sc], sc_w[:n_sc], core


def _dedup_min(tails, heads, weights):
    order = np.lexsort((weights, heads, tails))
    tails, heads, weights = tails[order], heads[order], weights[order]
    if tails.size:
        first = np.ones(tails.size, dtype=bool)
        first[1:] = (tails[1:] != tails[:-1]) | (heads[1:] != heads[:-1])
        return tails[first], heads[first], weights[first]
    return tails, heads, weights


def build_ch(graph: RoadGraph, hop_caps=DEFAULT_HOP_CAPS,
             settle_caps=DEFAULT_SETTLE_CAPS) -> ContractionData:
    """Full greedy hierarchy over the whole graph."""
    rank, level, sc_t, sc_h, sc_w, _ = contract(
        graph, None, hop_caps, settle_caps
    )
    tails = np.concatenate([graph.edge_tail.astype(np.int64), sc_t.astype(np.int64)])
    heads = np.concatenate([graph.fwd_head.astype(np.int64), sc_h.astype(np.int64)])
    ws = np.concatenate([graph.fwd_weight, sc_w])
    tails, heads, ws = _dedup_min(tails, heads, ws)
    up = rank[tails] < rank[heads]
    # upward CSR by tail
    ut, uh, uw = tails[up], heads[up], ws[up]
    uord = np.lexsort((uh, ut))
    up_index = np.zeros(graph.n + 1, dtype=np.int64)
    np.add.at(up_index, ut + 1, 1)
    np.cumsum(up_index, out=up_index)
    # downward grouped by head in sweep order
    dt, dh, dw = tails[~up], heads[~up], ws[~up]
    dn_order = np.lexsort((np.arange(graph.n), -level)).astype(np.int32)
    dn_pos = np.empty(graph.n, dtype=np.int32)
    dn_pos[dn_order] = np.arange(graph.n, dtype=np.int32)
    dord = np.lexsort((dt, dn_pos[dh]))
    dn_start = np.zeros(graph.n + 1, dtype=np.int64)
    np.add.at(dn_start, dn_pos[dh].astype(np.int64) + 1, 1)
    np.cumsum(dn_start, out=dn_start)
    return ContractionData(
        graph=graph,
        rank=rank.astype(np.int32),
        level=level.astype(np.int32),
        up_index=up_index,
        up_head=uh[uord].astype(np.int32),
        up_w=uw[uord],
        dn_order=dn_order,
        dn_pos=dn_pos,
        dn_start=dn_start,
        dn_tail=dt[dord].astype(np.int32),
        dn_w=dw[dord],
        n_shortcuts=int(sc_t.size),
    )


class ChContext:
    def __init__(self, n: int):
        self.dist = np.full(n, INF, dtype=np.int64)
        self.ver = np.zeros(n, dtype=np.int64)
        self.cur = np.int64(0)

    def begin(self):
        self.cur += 1
        return self.cur

    def label(self, v: int) -> int:
        return int(self.dist[v]) if self.ver[v] == self.cur else int(INF)


def forward_upward_search(
    data: ContractionData,
    sources,
    offsets=None,
    stop_at: int | None = None,
    ctx: ChContext | None = None,
) -> ChContext:
    """Dijkstra on the upward graph from the given sources; labels are
    upper bounds that a level-order sweep tightens to exact distances."""
    sources = np.asarray(sources, dtype=np.int32)
    if sources.size == 0:
        raise ValueError("empty source set")
    if offsets is None:
        offsets = np.zeros(sources.size, dtype=np.int64)
    if ctx is None:
        ctx = ChContext(data.n)
    cur = ctx.begin()
    CK.upward_search_kernel(
        data.up_index, data.up_head, data.up_w,
        sources, np.asarray(offsets, dtype=np.int64),
        np.int64(-1 if stop_at is None else stop_at),
        ctx.dist, ctx.ver, cur,
    )
    return ctx


def phast_sweep(data: ContractionData, ctx: ChContext,
                lo: int = 0, hi: int | None = None) -> ChContext:
    """Scan positions [lo, hi) of the sweep order; a full sweep after an
    upward search yields exact one-to-all distances."""
    CK.phast_sweep_kernel(
        data.dn_order, data.dn_start, data.dn_tail, data.dn_w,
        np.int64(lo), np.int64(data.n if hi is None else hi),
        ctx.dist, ctx.ver, ctx.cur,
    )
    return ctx


def phast_one_to_all(data: ContractionData, source: int,
                     ctx: ChContext | None = None) -> np.ndarray:
    ctx = forward_upward_search(data, [source], ctx=ctx)
    phast_sweep(data, ctx)
    out = np.full(data.n, INF, dtype=np.int64)
    valid = ctx.ver == ctx.cur
    out[valid] = ctx.dist[valid]
    return out


@dataclass
class SelectionGraph:
    """Downward subgraph closed under dependencies of a target set,
    in global sweep order."""

    heads: np.ndarray  # int32, selected vertices in sweep order
    start: np.ndarray  # int64 per selected head
    tail: np.ndarray
    w: np.ndarray
    vertex_count: int = field(default=0)

    def __post_init__(self):
        self.vertex_count = int(self.heads.size)


def rphast_select(data: ContractionData, targets) -> SelectionGraph:
    """Breadth-first closure from the targets along downward edges
    (head to tail), restricted to the collected vertices."""
    targets = np.asarray(targets, dtype=np.int64)
    if targets.size == 0:
        raise ValueError("empty target set")
    n = data.n
    visited = np.zeros(n, dtype=bool)
    stack = list(targets)
    visited[targets] = True
    while stack:
        v = stack.pop()
        pos = data.dn_pos[v]
        for i in range(data.dn_start[pos], data.dn_start[pos + 1]):
            t = int(data.dn_tail[i])
            if not visited[t]:
                visited[t] = True
                stack.append(t)
    sel = np.flatnonzero(visited)
    sel = sel[np.argsort(data.dn_pos[sel], kind="stable")]
    starts, tails, ws = [0], [], []
    for v in sel:
        pos = data.dn_pos[v]
        lo, hi = data.dn_start[pos], data.dn_start[pos + 1]
        tails.append(data.dn_tail[lo:hi])
        ws.append(data.dn_w[lo:hi])
        starts.append(starts[-1] + int(hi - lo))
    return SelectionGraph(
        heads=sel.astype(np.int32),
        start=np.array(starts, dtype=np.int64),
        tail=(np.concatenate(tails) if tails else np.empty(0)).astype(np.int32),
        w=(np.concatenate(ws) if ws else np.empty(0)).astype(np.int64),
    )


def rphast_sweep(sg: SelectionGraph, ctx: ChContext) -> ChContext:
    CK.phast_sweep_kernel(
        sg.heads, sg.start, sg.tail, sg.w,
        np.int64(0), np.int64(sg.vertex_count),
        ctx.dist, ctx.ver, ctx.cur,
    )
    return ctx


class ChBidiContext:
    def __init__(self, n: int):
        self.fdist = np.full(n, INF, dtype=np.int64)
        self.fver = np.zeros(n, dtype=np.int64)
        self.bdist = np.full(n, INF, dtype=np.int64)
        self.bver = np.zeros(n, dtype=np.int64)
        self.cur = np.int64(0)


def ch_distance(data: ContractionData, s: int, t: int,
                ctx: ChBidiContext | None = None) -> int:
    """Point-to-point distance: forward upward search meets a backward
    search over the downward graph."""
    if ctx is None:
        ctx = ChBidiContext(data.n)
    ctx.cur += 1
    best = CK.ch_bidirectional_kernel(
        data.up_index, data.up_head, data.up_w,
        data.dn_pos, data.dn_start, data.dn_tail, data.dn_w,
        np.int32(s), np.int32(t),
        ctx.fdist, ctx.fver, ctx.bdist, ctx.bver, ctx.cur,
    )
    return int(best)
