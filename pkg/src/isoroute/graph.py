"""Graph representation, DIMACS ingestion, coordinates, permutations, SCC restriction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

# Distance sentinel.  Stored in int64 so that INF + any edge weight never
# overflows; saturating_add clamps at INF.
INF = np.int64(2**62)

MAX_WEIGHT = 2**32 - 2  # weights are travel times in seconds


class DimacsFormatError(ValueError):
    """Malformed DIMACS input, with the offending line number."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class GraphValidationError(ValueError):
    pass


def saturating_add(a: int, b: int) -> np.int64:
    """a + b clamped at INF; INF absorbs."""
    if a >= INF or b >= INF:
        return INF
    return np.int64(a) + np.int64(b)


@dataclass
class RoadGraph:
    """Static directed graph in forward/reverse adjacency-array form.

    Edge ids are positions in canonical forward order (sorted by tail,
    then head).  The reverse adjacency mirrors the forward edges with a
    back-reference to the forward edge id.  Weights are nonnegative
    integer seconds.
    """

    n: int
    m: int
    fwd_index: np.ndarray  # int64[n+1]
    fwd_head: np.ndarray  # int32[m]
    fwd_weight: np.ndarray  # int64[m]
    rev_index: np.ndarray  # int64[n+1]
    rev_tail: np.ndarray  # int32[m]
    rev_weight: np.ndarray  # int64[m]
    rev_edge_id: np.ndarray  # int32[m], forward edge id of each reverse entry
    edge_tail: np.ndarray = field(default=None)  # int32[m], tail of edge id e

    def __post_init__(self):
        if self.edge_tail is None:
            counts = np.diff(self.fwd_index)
            self.edge_tail = np.repeat(
                np.arange(self.n, dtype=np.int32), counts
            )

    @classmethod
    def from_edges(
        cls,
        n: int,
        tails: np.ndarray,
        heads: np.ndarray,
        weights: np.ndarray,
    ) -> "RoadGraph":
        """Build the canonical form: self-loops dropped, parallel edges
        collapsed to minimum weight, edges sorted by (tail, head)."""
        tails = np.asarray(tails, dtype=np.int64)
        heads = np.asarray(heads, dtype=np.int64)
        weights = np.asarray(weights, dtype=np.int64)
        if tails.size:
            if tails.min() < 0 or tails.max() >= n or heads.min() < 0 or heads.max() >= n:
                raise GraphValidationError("edge endpoint out of range")
            if weights.min() < 0:
                raise GraphValidationError("negative edge weight")
            if weights.max() > MAX_WEIGHT:
                raise GraphValidationError("edge weight exceeds 32-bit seconds")
        keep = tails != heads
        tails, heads, weights = tails[keep], heads[keep], weights[keep]
        # Sort by (tail, head, weight) so the first edge of each (tail, head)
        # group carries the minimum weight.
        order = np.lexsort((weights, heads, tails))
        tails, heads, weights = tails[order], heads[order], weights[order]
        if tails.size:
            first = np.ones(tails.size, dtype=bool)
            first[1:] = (tails[1:] != tails[:-1]) | (heads[1:] != heads[:-1])
            tails, heads, weights = tails[first], heads[first], weights[first]
        m = tails.size
        fwd_index = np.zeros(n + 1, dtype=np.int64)
        np.add.at(fwd_index, tails + 1, 1)
        np.cumsum(fwd_index, out=fwd_index)
        rev_order = np.lexsort((tails, heads))
        rev_index = np.zeros(n + 1, dtype=np.int64)
        np.add.at(rev_index, heads + 1, 1)
        np.cumsum(rev_index, out=rev_index)
        return cls(
            n=n,
            m=m,
            fwd_index=fwd_index,
            fwd_head=heads.astype(np.int32),
            fwd_weight=weights.astype(np.int64),
            rev_index=rev_index,
            rev_tail=tails[rev_order].astype(np.int32),
            rev_weight=weights[rev_order].astype(np.int64),
            rev_edge_id=rev_order.astype(np.int32),
            edge_tail=tails.astype(np.int32),
        )

    def out_edges(self, v: int) -> list[tuple[int, int]]:
        lo, hi = self.fwd_index[v], self.fwd_index[v + 1]
        return [(int(self.fwd_head[i]), int(self.fwd_weight[i])) for i in range(lo, hi)]

    def in_edges(self, v: int) -> list[tuple[int, int]]:
        lo, hi = self.rev_index[v], self.rev_index[v + 1]
        return [(int(self.rev_tail[i]), int(self.rev_weight[i])) for i in range(lo, hi)]

    def edge_list(self) -> list[tuple[int, int, int]]:
        return [
            (int(self.edge_tail[e]), int(self.fwd_head[e]), int(self.fwd_weight[e]))
            for e in range(self.m)
        ]

    def as_csr(self) -> csr_matrix:
        """Weight matrix for scipy shortest-path routines (float64)."""
        return csr_matrix(
            (self.fwd_weight.astype(np.float64), self.fwd_head.astype(np.int64),
             self.fwd_index),
            shape=(self.n, self.n),
        )

    def validate(self) -> None:
        """Check the forward/reverse mirror invariants."""
        if self.fwd_index[-1] != self.m or self.rev_index[-1] != self.m:
            raise GraphValidationError("adjacency index does not cover m edges")
        fwd = {(int(self.edge_tail[e]), int(self.fwd_head[e])): int(self.fwd_weight[e])
               for e in range(self.m)}
        for v in range(self.n):
            for i in range(self.rev_index[v], self.rev_index[v + 1]):
                t = int(self.rev_tail[i])
                if fwd.get((t, v)) != int(self.rev_weight[i]):
                    raise GraphValidationError("reverse adjacency mismatch")
                e = int(self.rev_edge_id[i])
                if int(self.edge_tail[e]) != t or int(self.fwd_head[e]) != v:
                    raise GraphValidationError("reverse edge id mismatch")

    def __eq__(self, other) -> bool:
        if not isinstance(other, RoadGraph):
            return NotImplemented
        return (
            self.n == other.n
            and self.m == other.m
            and np.array_equal(self.fwd_index, other.fwd_index)
            and np.array_equal(self.fwd_head, other.fwd_head)
            and np.array_equal(self.fwd_weight, other.fwd_weight)
        )


@dataclass
class Coordinates:
    """Per-vertex position, micro-degree integer storage."""

    lat_udeg: np.ndarray  # int64[n]
    lon_udeg: np.ndarray  # int64[n]

    @property
    def n(self) -> int:
        return self.lat_udeg.shape[0]

    def lat(self) -> np.ndarray:
        return self.lat_udeg / 1e6

    def lon(self) -> np.ndarray:
        return self.lon_udeg / 1e6

    def validate(self) -> None:
        if self.lat_udeg.shape != self.lon_udeg.shape:
            raise GraphValidationError("coordinate arrays differ in length")
        if self.n and (
            np.abs(self.lat_udeg).max() > 90_000_000
            or np.abs(self.lon_udeg).max() > 180_000_000
        ):
            raise GraphValidationError("coordinate out of range")


@dataclass
class Permutation:
    """Bijection over [0, n): new_id_of and its inverse."""

    new_id_of: np.ndarray  # int32[n]
    inverse: np.ndarray  # int32[n], inverse[new] = old

    @classmethod
    def from_new_ids(cls, new_id_of: np.ndarray) -> "Permutation":
        new_id_of = np.asarray(new_id_of, dtype=np.int32)
        n = new_id_of.shape[0]
        if n and (new_id_of.min() < 0 or new_id_of.max() >= n
                  or np.unique(new_id_of).size != n):
            raise GraphValidationError("not a bijection over [0, n)")
        inverse = np.empty(n, dtype=np.int32)
        inverse[new_id_of] = np.arange(n, dtype=np.int32)
        return cls(new_id_of=new_id_of, inverse=inverse)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        ids = np.arange(n, dtype=np.int32)
        return cls(new_id_of=ids.copy(), inverse=ids.copy())

    @property
    def n(self) -> int:
        return self.new_id_of.shape[0]

    def is_identity(self) -> bool:
        return bool(np.all(self.new_id_of == np.arange(self.n)))


def parse_dimacs_gr(text) -> RoadGraph:
    """Parse DIMACS shortest-path `.gr` format.

    Accepts a string or an iterable of lines.  Input ids are 1-based;
    the result is 0-based with canonical edge order.
    """
    if isinstance(text, str):
        lines = text.splitlines()
    else:
        lines = [ln.rstrip("\n") for ln in text]
    n = None
    m_declared = None
    tails, heads, weights = [], [], []
    for ln_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        if parts[0] == "p":
            if n is not None:
                raise DimacsFormatError("duplicate problem line", ln_no)
            if len(parts) != 4 or parts[1] != "sp":
                raise DimacsFormatError("expected 'p sp <n> <m>'", ln_no)
            try:
                n, m_declared = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsFormatError("non-integer problem size", ln_no) from None
            if n < 0 or m_declared < 0:
                raise DimacsFormatError("negative problem size", ln_no)
        elif parts[0] == "a":
            if n is None:
                raise DimacsFormatError("arc before problem line", ln_no)
            if len(parts) != 4:
                raise DimacsFormatError("expected 'a <tail> <head> <weight>'", ln_no)
            try:
                t, h, w = int(parts[1]), int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsFormatError("non-integer arc field", ln_no) from None
            if not (1 <= t <= n) or not (1 <= h <= n):
                raise DimacsFormatError("edge endpoint out of range", ln_no)
            if w < 0:
                raise DimacsFormatError("negative weight", ln_no)
            if w > MAX_WEIGHT:
                raise DimacsFormatError("weight exceeds 32-bit seconds", ln_no)
            tails.append(t - 1)
            heads.append(h - 1)
            weights.append(w)
        else:
            raise DimacsFormatError(f"unknown record type {parts[0]!r}", ln_no)
    if n is None:
        raise DimacsFormatError("missing problem line")
    if m_declared is not None and len(tails) != m_declared:
        raise DimacsFormatError(
            f"declared {m_declared} arcs, found {len(tails)}"
        )
    return RoadGraph.from_edges(
        n,
        np.array(tails, dtype=np.int64),
        np.array(heads, dtype=np.int64),
        np.array(weights, dtype=np.int64),
    )


def serialize_dimacs_gr(graph: RoadGraph) -> str:
    out = [f"p sp {graph.n} {graph.m}"]
    for t, h, w in graph.edge_list():
        out.append(f"a {t + 1} {h + 1} {w}")
    return "\n".join(out) + "\n"


def parse_dimacs_co(text, expected_n: int | None = None) -> Coordinates:
    """Parse DIMACS coordinate `.co` format (`v id x y`, micro-degrees,
    x = longitude, y = latitude)."""
    if isinstance(text, str):
        lines = text.splitlines()
    else:
        lines = [ln.rstrip("\n") for ln in text]
    n = expected_n
    entries: dict[int, tuple[int, int]] = {}
    for ln_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        if parts[0] == "p":
            # 'p aux sp co <n>' header
            try:
                file_n = int(parts[-1])
            except ValueError:
                raise DimacsFormatError("non-integer coordinate count", ln_no) from None
            if n is not None and file_n != n:
                raise DimacsFormatError(
                    f"coordinate count {file_n} does not match graph size {n}", ln_no
                )
            n = file_n
        elif parts[0] == "v":
            if len(parts) != 4:
                raise DimacsFormatError("expected 'v <id> <x> <y>'", ln_no)
            try:
                vid, x, y = int(parts[1]), int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsFormatError("non-integer coordinate field", ln_no) from None
            if n is not None and not (1 <= vid <= n):
                raise DimacsFormatError("vertex id out of range", ln_no)
            if vid in entries:
                raise DimacsFormatError(f"duplicate coordinate for vertex {vid}", ln_no)
            entries[vid] = (x, y)
        else:
            raise DimacsFormatError(f"unknown record type {parts[0]!r}", ln_no)
    if n is None:
        n = max(entries) if entries else 0
    if len(entries) != n:
        raise DimacsFormatError(f"missing coordinate: have {len(entries)} of {n}")
    lon = np.zeros(n, dtype=np.int64)
    lat = np.zeros(n, dtype=np.int64)
    for vid, (x, y) in entries.items():
        lon[vid - 1] = x
        lat[vid - 1] = y
    coords = Coordinates(lat_udeg=lat, lon_udeg=lon)
    coords.validate()
    return coords


def serialize_dimacs_co(coords: Coordinates) -> str:
    out = [f"p aux sp co {coords.n}"]
    for v in range(coords.n):
        out.append(f"v {v + 1} {int(coords.lon_udeg[v])} {int(coords.lat_udeg[v])}")
    return "\n".join(out) + "\n"


NO_VERTEX = np.int32(-1)


def restrict_to_largest_scc(
    graph: RoadGraph, coords: Coordinates | None = None
) -> tuple[RoadGraph, Coordinates | None, np.ndarray]:
    """Induced subgraph of the largest strongly connected component.

    Returns the renumbered graph, matching coordinates, and the old-to-new
    vertex map (NO_VERTEX for dropped vertices).  Ties between equal-sized
    components break toward the one containing the smallest vertex id.
    """
    if graph.n == 0:
        return graph, coords, np.empty(0, dtype=np.int32)
    ncomp, labels = connected_components(
        graph.as_csr(), directed=True, connection="strong"
    )
    sizes = np.bincount(labels, minlength=ncomp)
    best_size = sizes.max()
    # first vertex whose component has max size: its component wins the tie
    winner = labels[np.flatnonzero(sizes[labels] == best_size)[0]]
    members = np.flatnonzero(labels == winner)
    new_id_of = np.full(graph.n, NO_VERTEX, dtype=np.int32)
    new_id_of[members] = np.arange(members.size, dtype=np.int32)
    keep = (new_id_of[graph.edge_tail] != NO_VERTEX) & (
        new_id_of[graph.fwd_head] != NO_VERTEX
    )
    sub = RoadGraph.from_edges(
        members.size,
        new_id_of[graph.edge_tail[keep]].astype(np.int64),
        new_id_of[graph.fwd_head[keep]].astype(np.int64),
        graph.fwd_weight[keep],
    )
    sub_coords = None
    if coords is not None:
        sub_coords = Coordinates(
            lat_udeg=coords.lat_udeg[members].copy(),
            lon_udeg=coords.lon_udeg[members].copy(),
        )
    return sub, sub_coords, new_id_of


def apply_permutation(graph: RoadGraph, perm: Permutation) -> RoadGraph:
    """Relabel vertices; canonical edge order is re-established."""
    if perm.n != graph.n:
        raise GraphValidationError("permutation size does not match graph")
    return RoadGraph.from_edges(
        graph.n,
        perm.new_id_of[graph.edge_tail].astype(np.int64),
        perm.new_id_of[graph.fwd_head].astype(np.int64),
        graph.fwd_weight,
    )


def permute_coordinates(coords: Coordinates, perm: Permutation) -> Coordinates:
    lat = np.empty_like(coords.lat_udeg)
    lon = np.empty_like(coords.lon_udeg)
    lat[perm.new_id_of] = coords.lat_udeg
    lon[perm.new_id_of] = coords.lon_udeg
    return Coordinates(lat_udeg=lat, lon_udeg=lon)
