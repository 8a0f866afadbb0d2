"""Deterministic synthetic road networks in DIMACS form.

Used when no real DIMACS instance is available: a W x H lattice with
random asymmetric travel times, a fraction of one-way streets, and a
sparse express-link overlay, restricted to its largest strongly
connected component.
"""

from __future__ import annotations

import numpy as np

from .graph import Coordinates, RoadGraph, restrict_to_largest_scc


def synth_road_network(
    width: int,
    height: int,
    seed: int = 1,
    oneway_fraction: float = 0.05,
    min_w: int = 20,
    max_w: int = 240,
    express_every: int = 16,
    arterial_every: int | None = None,
    arterial_keep: float = 0.15,
    bridge_crossings: bool = False,
    origin_lat_udeg: int = 49_000_000,
    origin_lon_udeg: int = 8_400_000,
    step_udeg: int = 900,
) -> tuple[RoadGraph, Coordinates]:
    """Grid road network with integer second weights.

    With `arterial_every` set, most edges crossing the lattice lines at
    that spacing are removed: neighborhoods connect through a few
    arterial crossings, giving the sparse-cut structure real road
    networks have (and that partition-based speedup techniques rely on).

    Returns the largest-SCC restriction, so the result is always
    strongly connected.
    """
    rng = np.random.default_rng(seed)
    n = width * height

    xs, ys = np.meshgrid(np.arange(width), np.arange(height))
    xs = xs.ravel()
    ys = ys.ravel()

    tails, heads = [], []
    # horizontal and vertical neighbors, both directions
    hx = np.flatnonzero(xs < width - 1)
    tails.append(hx)
    heads.append(hx + 1)
    tails.append(hx + 1)
    heads.append(hx)
    vy = np.flatnonzero(ys < height - 1)
    tails.append(vy)
    heads.append(vy + width)
    tails.append(vy + width)
    heads.append(vy)
    tails = np.concatenate(tails).astype(np.int64)
    heads = np.concatenate(heads).astype(np.int64)

    # express links: long jumps along rows, sparse
    ex_t, ex_h = [], []
    for y in range(0, height, express_every):
        for x in range(0, width - express_every, express_every):
            a = y * width + x
            b = y * width + x + express_every
            ex_t += [a, b]
            ex_h += [b, a]
    if ex_t:
        tails = np.concatenate([tails, np.array(ex_t, dtype=np.int64)])
        heads = np.concatenate([heads, np.array(ex_h, dtype=np.int64)])

    keep = rng.random(tails.size) >= oneway_fraction
    is_express = (np.abs(tails - heads) == express_every) & (
        ys[tails] == ys[heads]
    )
    if arterial_every:
        s = arterial_every
        cross_x = (xs[tails] // s) != (xs[heads] // s)
        cross_y = (ys[tails] // s) != (ys[heads] // s)
        cross = cross_x | cross_y
        bridge = np.zeros(tails.size, dtype=bool)
        if bridge_crossings:
            # one guaranteed collector-street crossing per block side
            bridge = (cross_x & (ys[tails] % s == s // 2)) | (
                cross_y & (xs[tails] % s == s // 2)
            )
        drop = cross & ~is_express & ~bridge & (
            rng.random(tails.size) >= arterial_keep
        )
        keep &= ~drop
    weights = rng.integers(min_w, max_w + 1, size=tails.size)
    tails, heads, weights = tails[keep], heads[keep], weights[keep]
    graph = RoadGraph.from_edges(n, tails, heads, weights)
    coords = Coordinates(
        lat_udeg=(origin_lat_udeg + ys * step_udeg).astype(np.int64),
        lon_udeg=(origin_lon_udeg + xs * step_udeg).astype(np.int64),
    )
    graph, coords, _ = restrict_to_largest_scc(graph, coords)
    return graph, coords


def lattice_partition(
    coords: Coordinates,
    block_sizes: list[int],
    step_udeg: int = 900,
    origin_lat_udeg: int = 49_000_000,
    origin_lon_udeg: int = 8_400_000,
) -> "MultilevelPartition":
    """Nested partition from coordinate blocks: level l cells are
    block_sizes[l-1]-spaced lattice squares.  Sizes must divide each
    other, so nesting holds by construction.

    Blocks are anchored at the generator origin (not the data minimum),
    so cut lines land exactly on the arterial corridors."""
    from .partition import MultilevelPartition, PartitionError

    for a, b in zip(block_sizes, block_sizes[1:]):
        if b % a != 0 or b <= a:
            raise PartitionError("block sizes must be increasing multiples")
    gx = (coords.lon_udeg - origin_lon_udeg) // step_udeg
    gy = (coords.lat_udeg - origin_lat_udeg) // step_udeg
    cells = []
    for s in block_sizes:
        bx = gx // s
        by = gy // s
        key = bx * (gy.max() // s + 2) + by
        _, dense = np.unique(key, return_inverse=True)
        cells.append(dense.astype(np.int32))
    return MultilevelPartition(cells=np.array(cells))
