"""Road-network isochrone engine.

Computes the set of directed edges with exactly one endpoint reachable
within a time limit from a source vertex, via a baseline Dijkstra variant
and a portfolio of speedup techniques (multilevel overlays and
contraction-based sweeps).
"""

from .customization import build_grasp_downward, customize, refine_eccentricities
from .graph import (
    INF,
    Coordinates,
    Permutation,
    RoadGraph,
    apply_permutation,
    parse_dimacs_co,
    parse_dimacs_gr,
    restrict_to_largest_scc,
)
from .isocrp import IsoCrpEngine, IsoGraspEngine
from .isodijkstra import IsochroneEdgeSet, brute_force_isochrone, iso_dijkstra
from .isophast import (
    CdEngine,
    CpEngine,
    DtEngine,
    compute_boundary_diameter,
    compute_core_ecc,
    prepro_cp,
    prepro_dt,
    prepro_generic,
)
from .partition import (
    EdgePartition,
    MultilevelPartition,
    build_multilevel_partition,
    crp_vertex_order,
    derive_edge_partition,
    load_partition,
    save_partition,
)

__all__ = [
    "INF",
    "Coordinates",
    "Permutation",
    "RoadGraph",
    "apply_permutation",
    "parse_dimacs_co",
    "parse_dimacs_gr",
    "restrict_to_largest_scc",
    "IsochroneEdgeSet",
    "brute_force_isochrone",
    "iso_dijkstra",
    "MultilevelPartition",
    "EdgePartition",
    "build_multilevel_partition",
    "derive_edge_partition",
    "crp_vertex_order",
    "save_partition",
    "load_partition",
    "customize",
    "refine_eccentricities",
    "build_grasp_downward",
    "IsoCrpEngine",
    "IsoGraspEngine",
    "prepro_generic",
    "compute_core_ecc",
    "compute_boundary_diameter",
    "prepro_cp",
    "prepro_dt",
    "CdEngine",
    "CpEngine",
    "DtEngine",
]
