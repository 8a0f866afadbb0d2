"""Nested multilevel vertex partitions, edge partitions, boundary info,
and the query-friendly vertex order."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import Coordinates, Permutation, RoadGraph


class PartitionError(ValueError):
    pass


@dataclass
class MultilevelPartition:
    """Nested cells: cells[l-1][v] is the cell id of v at level l (1-based
    levels; level 0 is implicit singletons, level L+1 the whole graph)."""

    cells: np.ndarray  # int32[L][n]
    counts: list[int] = field(default=None)

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=np.int32)
        if self.cells.ndim != 2:
            raise PartitionError("cells must be a (levels, n) array")
        if self.counts is None:
            self.counts = [int(self.cells[l].max()) + 1 if self.n else 0
                           for l in range(self.levels)]
        self.validate()

    @property
    def levels(self) -> int:
        return self.cells.shape[0]

    @property
    def n(self) -> int:
        return self.cells.shape[1]

    def cell_of(self, level: int, v: int) -> int:
        return int(self.cells[level - 1][v])

    def level_cells(self, level: int) -> np.ndarray:
        return self.cells[level - 1]

    def validate(self) -> None:
        for l in range(self.levels):
            ids = self.cells[l]
            if self.n == 0:
                continue
            if ids.min() < 0:
                raise PartitionError(f"negative cell id at level {l + 1}")
            k = self.counts[l]
            present = np.unique(ids)
            if present.size != k or present[-1] != k - 1:
                raise PartitionError(f"non-dense cell ids at level {l + 1}")
        # nesting: same cell at level l implies same cell at level l+1
        for l in range(self.levels - 1):
            lower, upper = self.cells[l], self.cells[l + 1]
            parent = np.full(self.counts[l], -1, dtype=np.int64)
            for c, p in zip(lower, upper):
                if parent[c] == -1:
                    parent[c] = p
                elif parent[c] != p:
                    raise PartitionError(
                        f"nesting violation between levels {l + 1} and {l + 2}"
                    )

    def parent_cells(self, level: int) -> np.ndarray:
        """Cell id at level+1 of each level-`level` cell."""
        parent = np.full(self.counts[level - 1], -1, dtype=np.int32)
        parent[self.cells[level - 1]] = self.cells[level]
        return parent

    def children_csr(self, level: int) -> tuple[np.ndarray, np.ndarray]:
        """CSR of level-(level-1) child cells per level-`level` cell."""
        lo = self.cells[level - 2]
        hi = self.cells[level - 1]
        parent_of_child = np.full(self.counts[level - 2], -1, dtype=np.int64)
        parent_of_child[lo] = hi
        order = np.argsort(parent_of_child, kind="stable")
        start = np.zeros(self.counts[level - 1] + 1, dtype=np.int64)
        np.add.at(start, parent_of_child + 1, 1)
        np.cumsum(start, out=start)
        return start, order.astype(np.int32)


@dataclass
class EdgePartition:
    """Cell id per edge plus the distinct/ambiguous vertex classification."""

    k: int
    cell_of_edge: np.ndarray  # int32[m]
    ambiguous: np.ndarray  # bool[n]; a vertex is distinct iff not ambiguous

    def validate(self, graph: RoadGraph) -> None:
        if self.cell_of_edge.shape[0] != graph.m:
            raise PartitionError("edge partition size does not match graph")
        if graph.m:
            present = np.unique(self.cell_of_edge)
            if self.cell_of_edge.min() < 0 or present.size != self.k or \
                    present[-1] != self.k - 1:
                raise PartitionError("non-dense edge cell ids")


def classify_vertices(graph: RoadGraph, cell_of_edge: np.ndarray, n: int
                      ) -> np.ndarray:
    """ambiguous[v] = incident (in+out) edges span more than one cell."""
    first = np.full(n, -1, dtype=np.int64)
    ambiguous = np.zeros(n, dtype=bool)
    for arr_v, arr_e in (
        (graph.edge_tail, np.arange(graph.m)),
        (graph.fwd_head, np.arange(graph.m)),
    ):
        for v, e in zip(arr_v, arr_e):
            c = cell_of_edge[e]
            if first[v] == -1:
                first[v] = c
            elif first[v] != c:
                ambiguous[v] = True
    return ambiguous


@dataclass
class BoundaryInfo:
    """Per level: boundary flag per vertex, boundary edge ids, per-cell
    boundary-vertex lists in CSR form."""

    edge_level: np.ndarray  # int32[m], max level at which the edge crosses (0 if none)
    boundary_level: np.ndarray  # int32[n], max level at which v is boundary (0 if none)
    bstart: list[np.ndarray]  # per level l (1-based): int64[k_l + 1]
    bvert: list[np.ndarray]  # per level l: int32, grouped by cell, ascending ids

    def is_boundary(self, level: int, v: int) -> bool:
        return bool(self.boundary_level[v] >= level)

    def boundary_edges(self, level: int) -> np.ndarray:
        return np.flatnonzero(self.edge_level >= level)

    def cell_boundary(self, level: int, cell: int) -> np.ndarray:
        s = self.bstart[level - 1]
        return self.bvert[level - 1][s[cell]:s[cell + 1]]


def compute_boundary_info(graph: RoadGraph, mlp: MultilevelPartition
                          ) -> BoundaryInfo:
    if mlp.n != graph.n:
        raise PartitionError("partition size does not match graph")
    edge_level = np.zeros(graph.m, dtype=np.int32)
    boundary_level = np.zeros(graph.n, dtype=np.int32)
    for l in range(1, mlp.levels + 1):
        cells = mlp.level_cells(l)
        cross = cells[graph.edge_tail] != cells[graph.fwd_head]
        edge_level[cross] = l
        bmask = np.zeros(graph.n, dtype=bool)
        bmask[graph.edge_tail[cross]] = True
        bmask[graph.fwd_head[cross]] = True
        boundary_level[bmask] = l
    bstart, bvert = [], []
    for l in range(1, mlp.levels + 1):
        cells = mlp.level_cells(l)
        verts = np.flatnonzero(boundary_level >= l).astype(np.int32)
        order = np.argsort(cells[verts], kind="stable")
        verts = verts[order]
        start = np.zeros(mlp.counts[l - 1] + 1, dtype=np.int64)
        np.add.at(start, cells[verts].astype(np.int64) + 1, 1)
        np.cumsum(start, out=start)
        bstart.append(start)
        bvert.append(verts)
    return BoundaryInfo(
        edge_level=edge_level,
        boundary_level=boundary_level,
        bstart=bstart,
        bvert=bvert,
    )


def build_multilevel_partition(
    graph: RoadGraph, coords: Coordinates, max_cell_sizes: list[int]
) -> MultilevelPartition:
    """Top-down recursive geometric bisection: split the vertex set along
    the wider coordinate axis at the median until each piece fits the
    level's size bound.  Nesting holds by construction."""
    if not max_cell_sizes:
        raise PartitionError("empty size list")
    sizes = list(max_cell_sizes)
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise PartitionError("max cell sizes must be strictly increasing")
    if any(s < 1 for s in sizes):
        raise PartitionError("cell sizes must be positive")
    if coords.n != graph.n:
        raise PartitionError("coordinates do not match graph")
    L = len(sizes)
    n = graph.n
    cells = np.zeros((L, n), dtype=np.int32)
    lon = coords.lon_udeg
    lat = coords.lat_udeg

    def bisect(ids: np.ndarray, limit: int) -> list[np.ndarray]:
        if ids.size <= limit:
            return [ids]
        lon_span = int(lon[ids].max() - lon[ids].min())
        lat_span = int(lat[ids].max() - lat[ids].min())
        axis = lon if lon_span >= lat_span else lat
        order = np.lexsort((ids, axis[ids]))
        half = (ids.size + 1) // 2
        left, right = ids[order[:half]], ids[order[half:]]
        return bisect(left, limit) + bisect(right, limit)

    pieces = [np.arange(n, dtype=np.int64)]
    for level in range(L, 0, -1):
        next_pieces = []
        cid = 0
        for piece in pieces:
            for sub in bisect(piece, sizes[level - 1]):
                cells[level - 1][sub] = cid
                cid += 1
                next_pieces.append(sub)
        pieces = next_pieces
    return MultilevelPartition(cells=cells)


def derive_edge_partition(
    graph: RoadGraph, mlp: MultilevelPartition, level: int
) -> EdgePartition:
    """Edge cell = vertex cell of the edge's tail at the given level."""
    if not (1 <= level <= mlp.levels):
        raise PartitionError(f"level {level} out of range")
    vcells = mlp.level_cells(level)
    cell_of_edge = vcells[graph.edge_tail].astype(np.int32)
    # re-densify in case some vertex cell has no outgoing edges
    present, dense = np.unique(cell_of_edge, return_inverse=True)
    cell_of_edge = dense.astype(np.int32)
    ambiguous = classify_vertices(graph, cell_of_edge, graph.n)
    return EdgePartition(
        k=int(present.size), cell_of_edge=cell_of_edge, ambiguous=ambiguous
    )


def crp_vertex_order(
    mlp: MultilevelPartition, boundary: BoundaryInfo
) -> Permutation:
    """Boundary vertices first, by descending boundary level; within a
    level group by (cell id at that level, original id); interior vertices
    last by (level-1 cell id, original id)."""
    n = mlp.n
    bl = boundary.boundary_level
    group = mlp.levels - bl  # 0 for level-L boundary ... L for interior
    key_cell = np.empty(n, dtype=np.int64)
    for l in range(1, mlp.levels + 1):
        mask = bl == l
        key_cell[mask] = mlp.level_cells(l)[mask]
    interior = bl == 0
    key_cell[interior] = mlp.level_cells(1)[interior]
    order = np.lexsort((np.arange(n), key_cell, group))
    new_id_of = np.empty(n, dtype=np.int32)
    new_id_of[order] = np.arange(n, dtype=np.int32)
    return Permutation.from_new_ids(new_id_of)


def save_partition(mlp_or_ep, path_or_stream) -> None:
    """Write the text format (`mlp` or `ep` header)."""
    close = False
    if isinstance(path_or_stream, (str, bytes)) or hasattr(path_or_stream, "__fspath__"):
        stream = open(path_or_stream, "w")
        close = True
    else:
        stream = path_or_stream
    try:
        if isinstance(mlp_or_ep, MultilevelPartition):
            mlp = mlp_or_ep
            stream.write(f"mlp {mlp.levels} {mlp.n}\n")
            for v in range(mlp.n):
                stream.write(" ".join(str(int(mlp.cells[l][v]))
                                      for l in range(mlp.levels)) + "\n")
        elif isinstance(mlp_or_ep, EdgePartition):
            ep = mlp_or_ep
            stream.write(f"ep {ep.k} {ep.cell_of_edge.shape[0]}\n")
            for c in ep.cell_of_edge:
                stream.write(f"{int(c)}\n")
        else:
            raise TypeError("expected MultilevelPartition or EdgePartition")
    finally:
        if close:
            stream.close()


def load_partition(path_or_stream, graph: RoadGraph | None = None):
    """Load either partition format; validates density, nesting, and
    (when a graph is given) size agreement."""
    close = False
    if isinstance(path_or_stream, (str, bytes)) or hasattr(path_or_stream, "__fspath__"):
        stream = open(path_or_stream)
        close = True
    else:
        stream = path_or_stream
    try:
        header = stream.readline().split()
        if not header:
            raise PartitionError("empty partition file")
        if header[0] == "mlp":
            if len(header) != 3:
                raise PartitionError("expected 'mlp <L> <n>'")
            L, n = int(header[1]), int(header[2])
            if graph is not None and n != graph.n:
                raise PartitionError(
                    f"partition for {n} vertices, graph has {graph.n}"
                )
            cells = np.zeros((L, n), dtype=np.int32)
            for v in range(n):
                parts = stream.readline().split()
                if len(parts) != L:
                    raise PartitionError(f"vertex {v}: expected {L} cell ids")
                for l in range(L):
                    cells[l][v] = int(parts[l])
            return MultilevelPartition(cells=cells)
        if header[0] == "ep":
            if len(header) != 3:
                raise PartitionError("expected 'ep <k> <m>'")
            k, m = int(header[1]), int(header[2])
            if graph is not None and m != graph.m:
                raise PartitionError(f"partition for {m} edges, graph has {graph.m}")
            cell_of_edge = np.zeros(m, dtype=np.int32)
            for e in range(m):
                line = stream.readline().split()
                if len(line) != 1:
                    raise PartitionError(f"edge {e}: expected one cell id")
                cell_of_edge[e] = int(line[0])
            if m:
                present = np.unique(cell_of_edge)
                if cell_of_edge.min() < 0 or present.size != k or present[-1] != k - 1:
                    raise PartitionError("non-dense edge cell ids")
            if graph is None:
                raise PartitionError("edge partition load requires the graph")
            ambiguous = classify_vertices(graph, cell_of_edge, graph.n)
            return EdgePartition(k=k, cell_of_edge=cell_of_edge, ambiguous=ambiguous)
        raise PartitionError(f"unknown partition header {header[0]!r}")
    finally:
        if close:
            stream.close()


def single_level_partition(
    graph: RoadGraph, coords: Coordinates, k: int
) -> np.ndarray:
    """Geometric partition into about k cells; returns cell_of[n]."""
    if k < 1:
        raise PartitionError("k must be positive")
    size = max(1, -(-graph.n // k))
    mlp = build_multilevel_partition(graph, coords, [size])
    return mlp.level_cells(1).copy()


def scaled_cell_sizes(n: int, ratio: int = 16, min_size: int = 64,
                      max_levels: int = 4) -> list[int]:
    """Default level sizes: geometric scale-down with the top level at
    about n / ratio, mirroring the reference parameterization."""
    sizes = []
    top = max(min_size, 1 << int(np.ceil(np.log2(max(2, n / ratio)))))
    s = top
    while s >= min_size and len(sizes) < max_levels:
        sizes.append(s)
        s //= ratio
    sizes.reverse()
    if not sizes:
        sizes = [max(2, n)]
    return sizes
