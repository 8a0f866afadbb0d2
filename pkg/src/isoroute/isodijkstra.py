"""Problem definition, the baseline algorithm, and the ground-truth oracle."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import dijkstra as _scipy_dijkstra

from ._kernels import iso_dijkstra_kernel
from .graph import INF, RoadGraph

IN_OUT = 0  # tail in range, head out
OUT_IN = 1  # head in range, tail out

_DIR_NAMES = {IN_OUT: "in_out", OUT_IN: "out_in"}


@dataclass
class IsochroneEdgeSet:
    """Canonical result: sorted, duplicate-free directed original edges
    with exactly one endpoint in range, each tagged with its direction."""

    edge_ids: np.ndarray  # int64, sorted ascending
    directions: np.ndarray  # uint8, IN_OUT / OUT_IN

    @classmethod
    def from_buffers(cls, edge_ids, directions) -> "IsochroneEdgeSet":
        edge_ids = np.asarray(edge_ids, dtype=np.int64)
        directions = np.asarray(directions, dtype=np.uint8)
        order = np.argsort(edge_ids, kind="stable")
        edge_ids = edge_ids[order]
        directions = directions[order]
        if edge_ids.size:
            uniq = np.ones(edge_ids.size, dtype=bool)
            uniq[1:] = edge_ids[1:] != edge_ids[:-1]
            edge_ids = edge_ids[uniq]
            directions = directions[uniq]
        return cls(edge_ids=edge_ids, directions=directions)

    def __len__(self) -> int:
        return int(self.edge_ids.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, IsochroneEdgeSet):
            return NotImplemented
        return np.array_equal(self.edge_ids, other.edge_ids) and np.array_equal(
            self.directions, other.directions
        )

    def to_lines(self, graph: RoadGraph) -> list[str]:
        """Text serialization: `tail head direction`, 1-based, canonical order."""
        return [
            f"{int(graph.edge_tail[e]) + 1} {int(graph.fwd_head[e]) + 1} "
            f"{_DIR_NAMES[int(d)]}"
            for e, d in zip(self.edge_ids, self.directions)
        ]

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(self.edge_ids.astype("<i8").tobytes())
        h.update(self.directions.astype("<u1").tobytes())
        return h.hexdigest()[:16]

    def as_pairs(self, graph: RoadGraph) -> set[tuple[int, int, str]]:
        """(tail, head, direction) triples, 1-based; convenient in tests."""
        return {
            (int(graph.edge_tail[e]) + 1, int(graph.fwd_head[e]) + 1,
             _DIR_NAMES[int(d)])
            for e, d in zip(self.edge_ids, self.directions)
        }


class QueryContext:
    """Reusable per-query scratch state for one graph.

    Not thread-safe; concurrent queries each need their own context.
    """

    def __init__(self, graph: RoadGraph):
        self.graph = graph
        n = graph.n
        self.dist = np.full(n, INF, dtype=np.int64)
        self.state = np.zeros(n, dtype=np.uint8)
        self.ver = np.zeros(n, dtype=np.int64)
        self.cur = np.int64(0)
        self.touched = np.empty(n, dtype=np.int32)
        self.last_settled = 0

    def next_version(self) -> np.int64:
        self.cur += 1
        return self.cur

    def label(self, v: int) -> int:
        """Distance label of v after the last run (INF if untouched)."""
        return int(self.dist[v]) if self.ver[v] == self.cur else int(INF)

    def is_settled(self, v: int) -> bool:
        return bool(self.ver[v] == self.cur and self.state[v] == 2)


def iso_dijkstra(
    graph: RoadGraph, source: int, tau: int, ctx: QueryContext | None = None
) -> IsochroneEdgeSet:
    """Baseline isochrone computation (stopping-rule Dijkstra + queue sweep)."""
    if not (0 <= source < graph.n):
        raise ValueError(f"source {source} out of range")
    if ctx is None:
        ctx = QueryContext(graph)
    cur = ctx.next_version()
    edges, dirs, n_out, settled, _ = iso_dijkstra_kernel(
        graph.fwd_index, graph.fwd_head, graph.fwd_weight,
        graph.rev_index, graph.rev_tail, graph.rev_weight, graph.rev_edge_id,
        np.int32(source), np.int64(tau),
        ctx.dist, ctx.state, ctx.ver, cur,
        ctx.touched,
    )
    ctx.last_settled = int(settled)
    return IsochroneEdgeSet.from_buffers(edges[:n_out], dirs[:n_out])


def full_distances(graph: RoadGraph, source: int) -> np.ndarray:
    """One-to-all distances via scipy (independent of the hand-written
    kernels); int64 with INF for unreachable."""
    d = _scipy_dijkstra(graph.as_csr(), directed=True, indices=source)
    out = np.full(graph.n, INF, dtype=np.int64)
    finite = np.isfinite(d)
    out[finite] = np.round(d[finite]).astype(np.int64)
    return out


def brute_force_isochrone(
    graph: RoadGraph, source: int, tau: int
) -> IsochroneEdgeSet:
    """Independent oracle: full Dijkstra, then filter every edge by the
    exactly-one-endpoint-in-range definition.  Test/verification use only."""
    d = full_distances(graph, source)
    in_range = d <= tau
    t_in = in_range[graph.edge_tail]
    h_in = in_range[graph.fwd_head]
    mask = t_in != h_in
    ids = np.flatnonzero(mask)
    dirs = np.where(t_in[ids], IN_OUT, OUT_IN).astype(np.uint8)
    return IsochroneEdgeSet.from_buffers(ids, dirs)
