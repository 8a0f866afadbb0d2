"""Dataset assembly: build, persist, and reload the per-algorithm
structures behind the CLI and the HTTP service."""

from __future__ import annotations

import pickle
from dataclasses import dataclass, field
import numpy as np

from .bench import BaselineEngine
from .customization import MldData, build_grasp_downward, customize
from .graph import Coordinates, RoadGraph, parse_dimacs_co, parse_dimacs_gr, \
    restrict_to_largest_scc
from .isocrp import IsoCrpEngine, IsoGraspEngine
from .isodijkstra import full_distances
from .isophast import (
    CdEngine,
    CpEngine,
    DtEngine,
    compute_core_ecc,
    prepro_cp,
    prepro_dt,
    prepro_generic,
)
from .partition import (
    EdgePartition,
    MultilevelPartition,
    build_multilevel_partition,
    derive_edge_partition,
    load_partition,
    scaled_cell_sizes,
    single_level_partition,
)

MLD_ALGOS = ("isocrp", "isograsp")
PHAST_ALGOS = ("isophast-cd", "isophast-cp", "isophast-dt")
ALL_ALGOS = ("isodijkstra",) + MLD_ALGOS + PHAST_ALGOS


def default_phast_cells(n: int, algo: str, parallel: bool = False) -> int:
    """Cell counts scaled from the reference parameterization
    (18M vertices with k = 2^12 / 2^11 / 2^14, or 256 / 256 / 2^12
    when queries run in parallel)."""
    ref_n = 18_010_173
    ref = {"isophast-cd": 2**12, "isophast-cp": 2**11, "isophast-dt": 2**14}
    ref_par = {"isophast-cd": 256, "isophast-cp": 256, "isophast-dt": 2**12}
    k = (ref_par if parallel else ref)[algo]
    scaled = max(4, int(round(k * n / ref_n)))
    return 1 << int(np.ceil(np.log2(scaled)))


def default_compress(n: int, parallel: bool = False) -> int:
    ref_n = 18_010_173
    c = 2**13 if parallel else 2**16
    return max(16, min(n // 2, 1 << int(np.ceil(np.log2(max(2, c * n / ref_n))))))


@dataclass
class Dataset:
    """A graph plus any number of prepared algorithm structures."""

    graph: RoadGraph
    coords: Coordinates | None = None
    mld: dict[str, MldData] = field(default_factory=dict)  # keyed by algo
    phast: dict[str, object] = field(default_factory=dict)

    def algorithms(self) -> list[str]:
        algos = ["isodijkstra"]
        algos += [a for a in MLD_ALGOS if a in self.mld]
        algos += [a for a in PHAST_ALGOS if a in self.phast]
        return algos

    def build_engines(self, names=None) -> dict:
        engines: dict = {}
        for name in (names or self.algorithms()):
            if name == "isodijkstra":
                engines[name] = BaselineEngine(self.graph)
            elif name in self.mld:
                data = self.mld[name]
                engines[name] = (IsoCrpEngine(data) if name == "isocrp"
                                 else IsoGraspEngine(data))
            elif name in self.phast:
                obj = self.phast[name]
                if name == "isophast-cd":
                    engines[name] = CdEngine(obj)
                elif name == "isophast-cp":
                    engines[name] = CpEngine(obj)
                else:
                    engines[name] = DtEngine(obj)
            else:
                raise KeyError(f"no structures for algorithm {name!r}")
        return engines

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            pickle.dump(self, fh, protocol=pickle.HIGHEST_PROTOCOL)

    @classmethod
    def load(cls, path) -> "Dataset":
        with open(path, "rb") as fh:
            obj = pickle.load(fh)
        if not isinstance(obj, cls):
            raise TypeError(f"{path} does not hold a dataset bundle")
        return obj

    @classmethod
    def load_many(cls, paths) -> "Dataset":
        parts = [cls.load(p) for p in paths]
        first = parts[0]
        for other in parts[1:]:
            if other.graph != first.graph:
                raise ValueError("bundles were built from different graphs")
            first.mld.update(other.mld)
            first.phast.update(other.phast)
            if first.coords is None:
                first.coords = other.coords
        return first


def load_graph(gr_path, co_path=None) -> tuple[RoadGraph, Coordinates | None]:
    """Parse DIMACS input and restrict to the largest strongly connected
    component (every algorithm assumes strong connectivity)."""
    with open(gr_path) as fh:
        graph = parse_dimacs_gr(fh)
    coords = None
    if co_path is not None:
        with open(co_path) as fh:
            coords = parse_dimacs_co(fh, expected_n=graph.n)
    graph2, coords2, _ = restrict_to_largest_scc(graph, coords)
    return graph2, coords2


def pseudo_coordinates(graph: RoadGraph) -> Coordinates:
    """Deterministic stand-in coordinates when no .co file exists: the
    distance fields of two far-apart vertices span a 2-d embedding good
    enough for geometric bisection."""
    from .graph import INF

    d0 = full_distances(graph, 0)
    a = int(np.argmax(np.where(d0 >= INF, -1, d0)))
    da = full_distances(graph, a)
    b = int(np.argmax(np.where(da >= INF, -1, da)))
    db = full_distances(graph, b)
    sa = np.clip(da, 0, 10**9).astype(np.float64)
    sb = np.clip(db, 0, 10**9).astype(np.float64)
    lat = (sa / max(sa.max(), 1.0) * 1_000_000).astype(np.int64)
    lon = (sb / max(sb.max(), 1.0) * 1_000_000).astype(np.int64)
    return Coordinates(lat_udeg=lat, lon_udeg=lon)


def build_mld(graph: RoadGraph, mlp: MultilevelPartition, algo: str,
              ecc_mode: str = "sep", threads: int | None = None) -> MldData:
    data = customize(graph, mlp, mode=ecc_mode, threads=threads)
    if algo == "isograsp":
        data = build_grasp_downward(data, threads=threads)
    return data


def build_phast(graph: RoadGraph, partition, algo: str, compress: int = 0,
                threads: int = 2):
    """partition: cell_of array (vertex) for cd/cp, EdgePartition for dt."""
    if algo == "isophast-dt":
        if not isinstance(partition, EdgePartition):
            raise TypeError("dt needs an edge partition")
        base = prepro_generic(graph, partition, threads=threads)
        return prepro_dt(base, C=compress, threads=threads)
    base = prepro_generic(graph, partition, threads=threads)
    compute_core_ecc(base, threads=threads)
    if algo == "isophast-cd":
        return base
    if algo == "isophast-cp":
        return prepro_cp(base)
    raise ValueError(f"unknown strategy {algo!r}")


def build_dataset(
    graph: RoadGraph,
    coords: Coordinates | None,
    algos,
    *,
    mlp: MultilevelPartition | None = None,
    ecc_mode: str = "sep",
    cells: dict | None = None,
    compress: int | None = None,
    parallel_tuning: bool = False,
    threads: int = 2,
) -> Dataset:
    """One-stop builder used by verify/bench/serve: constructs default
    partitions and all requested structures."""
    if coords is None:
        coords = pseudo_coordinates(graph)
    ds = Dataset(graph=graph, coords=coords)
    wanted = list(algos)
    if any(a in MLD_ALGOS for a in wanted):
        if mlp is None:
            mlp = build_multilevel_partition(
                graph, coords, scaled_cell_sizes(graph.n)
            )
        for a in MLD_ALGOS:
            if a in wanted:
                ds.mld[a] = build_mld(graph, mlp, a, ecc_mode, threads)
    for a in PHAST_ALGOS:
        if a not in wanted:
            continue
        k = (cells or {}).get(a) or default_phast_cells(graph.n, a, parallel_tuning)
        cell_of = single_level_partition(graph, coords, k)
        if a == "isophast-dt":
            sub_mlp = MultilevelPartition(cells=cell_of.reshape(1, -1))
            ep = derive_edge_partition(graph, sub_mlp, 1)
            C = compress if compress is not None else default_compress(
                graph.n, parallel_tuning
            )
            ds.phast[a] = build_phast(graph, ep, a, compress=C, threads=threads)
        else:
            ds.phast[a] = build_phast(graph, cell_of, a, threads=threads)
    return ds


def resolve_partition(path, graph: RoadGraph, level: int | None,
                      for_dt: bool):
    """Load a partition file and reduce it to what a strategy needs: a
    vertex cell array for cd/cp, an edge partition for dt.  Multilevel
    files require an explicit level."""
    part = load_partition(path, graph)
    if isinstance(part, EdgePartition):
        if not for_dt:
            raise ValueError("cd/cp need a vertex partition, got an edge one")
        return part
    if level is None:
        raise ValueError(
            "a multilevel partition needs --level to pick the cell layer"
        )
    if for_dt:
        return derive_edge_partition(graph, part, level)
    return part.level_cells(level).copy()
