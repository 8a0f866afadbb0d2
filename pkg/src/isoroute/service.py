"""HTTP query service: isochrone requests answered as GeoJSON."""

from __future__ import annotations

import threading
import time

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .graph import Coordinates, RoadGraph
from .isodijkstra import IsochroneEdgeSet
from .spatial import SpatialIndex


class InfoResponse(BaseModel):
    vertices: int
    edges: int
    bbox: dict[str, float]
    algorithms: list[str]
    tau_min_s: int = 1
    tau_max_s: int = 3_600 * 100


class IsochroneSummary(BaseModel):
    edge_count: int
    query_ms: float
    source: int
    tau_s: int
    algo: str


class EngineRegistry:
    """Preloaded per-algorithm structures over one shared graph.

    Engines keep reusable scratch state, so each engine serializes its
    queries behind a lock; different algorithms run concurrently."""

    def __init__(self, graph: RoadGraph, coords: Coordinates, engines: dict,
                 threads: int = 1):
        self.graph = graph
        self.coords = coords
        self.engines = engines
        self.threads = threads
        self._locks = {name: threading.Lock() for name in engines}
        self.index = SpatialIndex(coords)

    def query(self, name: str, source: int, tau: int):
        engine = self.engines[name]
        with self._locks[name]:
            return engine.query(source, tau, threads=self.threads)


def edges_to_feature_collection(
    result: IsochroneEdgeSet, graph: RoadGraph, coords: Coordinates,
    summary: IsochroneSummary,
) -> dict:
    lat = coords.lat()
    lon = coords.lon()
    dir_names = {0: "in_out", 1: "out_in"}
    features = []
    for e, d in zip(result.edge_ids, result.directions):
        t = int(graph.edge_tail[e])
        h = int(graph.fwd_head[e])
        features.append({
            "type": "Feature",
            "geometry": {
                "type": "LineString",
                "coordinates": [
                    [round(float(lon[t]), 6), round(float(lat[t]), 6)],
                    [round(float(lon[h]), 6), round(float(lat[h]), 6)],
                ],
            },
            "properties": {
                "tail": t + 1,
                "head": h + 1,
                "direction": dir_names[int(d)],
                "tau_s": summary.tau_s,
                "algo": summary.algo,
            },
        })
    return {
        "type": "FeatureCollection",
        "features": features,
        "properties": summary.model_dump(),
    }


def create_app(registry: EngineRegistry) -> FastAPI:
    app = FastAPI(title="isoroute", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["GET"],
        allow_headers=["*"],
    )
    app.state.registry = registry

    @app.get("/api/info", response_model=InfoResponse)
    def handle_info():
        g = registry.graph
        return InfoResponse(
            vertices=g.n,
            edges=g.m,
            bbox=registry.index.bbox(),
            algorithms=sorted(registry.engines),
        )

    @app.get("/api/isochrone")
    def handle_isochrone(
        tau: int = Query(...),
        algo: str = Query("isodijkstra"),
        source: int | None = Query(None),
        lat: float | None = Query(None),
        lon: float | None = Query(None),
    ):
        if tau <= 0:
            raise HTTPException(status_code=422, detail="tau must be positive")
        if algo not in registry.engines:
            raise HTTPException(
                status_code=404,
                detail=f"unknown algorithm {algo!r}; "
                       f"loaded: {sorted(registry.engines)}",
            )
        have_latlon = lat is not None and lon is not None
        if (source is None) == (not have_latlon):
            raise HTTPException(
                status_code=400,
                detail="pass exactly one of source= or lat=&lon=",
            )
        if source is None:
            src0 = registry.index.nearest_vertex(lat, lon)
        else:
            src0 = source - 1  # external ids are 1-based
            if not (0 <= src0 < registry.graph.n):
                raise HTTPException(status_code=400, detail="source out of range")
        t0 = time.perf_counter()
        res = registry.query(algo, src0, tau)
        ms = (time.perf_counter() - t0) * 1e3
        summary = IsochroneSummary(
            edge_count=len(res.edges), query_ms=round(ms, 3),
            source=src0 + 1, tau_s=tau, algo=algo,
        )
        return edges_to_feature_collection(
            res.edges, registry.graph, registry.coords, summary
        )

    return app
