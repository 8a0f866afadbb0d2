"""Benchmark harness: reproducible workloads, oracle verification, and
CSV timing runs."""

from __future__ import annotations

import csv
import hashlib
import io
import statistics
import time
from dataclasses import dataclass, field

from .graph import RoadGraph
from .isocrp import QueryResult, QueryStats
from .isodijkstra import QueryContext, brute_force_isochrone, iso_dijkstra

CSV_HEADER = ("algo,tau_s,threads,settled,active_cells,"
              "t_upward_ms,t_scan_ms,t_total_ms,result_hash")


def splitmix64(state: int) -> tuple[int, int]:
    """One step of the splitmix64 generator (documented constants
    0x9E3779B97F4A7C15, 0xBF58476D1CE4E5B9, 0x94D049BB133111EB)."""
    mask = (1 << 64) - 1
    state = (state + 0x9E3779B97F4A7C15) & mask
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    return state, z ^ (z >> 31)


@dataclass
class QueryWorkload:
    """Reproducible (source, tau) pairs: uniform random sources crossed
    with the tau grid."""

    seed: int
    items: list[tuple[int, int]]  # (source, tau_seconds)
    sources: list[int] = field(default_factory=list)
    tau_list_s: list[int] = field(default_factory=list)


def gen_workload(n_vertices: int, n_queries: int, seed: int,
                 tau_list_s: list[int]) -> QueryWorkload:
    if n_queries <= 0:
        raise ValueError("workload needs at least one query")
    state = seed & ((1 << 64) - 1)
    sources = []
    for _ in range(n_queries):
        state, value = splitmix64(state)
        sources.append(int(value % n_vertices))
    items = [(s, int(tau)) for tau in tau_list_s for s in sources]
    return QueryWorkload(seed=seed, items=items, sources=sources,
                         tau_list_s=[int(t) for t in tau_list_s])


class BaselineEngine:
    """Adapter exposing the baseline algorithm with the engine interface."""

    name = "isodijkstra"

    def __init__(self, graph: RoadGraph):
        self.graph = graph
        self.ctx = QueryContext(graph)

    def query(self, source: int, tau: int, threads: int = 1) -> QueryResult:
        t0 = time.perf_counter()
        edges = iso_dijkstra(self.graph, source, tau, self.ctx)
        dt = (time.perf_counter() - t0) * 1e3
        return QueryResult(
            edges=edges,
            stats=QueryStats(settled=self.ctx.last_settled, active_cells=0,
                             t_upward_ms=dt, t_scan_ms=0.0, t_total_ms=dt),
        )


@dataclass
class Mismatch:
    algo: str
    source: int
    tau: int
    missing: list[tuple[int, int, str]]
    spurious: list[tuple[int, int, str]]

    def describe(self) -> str:
        parts = [f"{self.algo}: source={self.source} tau={self.tau}s"]
        if self.missing:
            parts.append(f"  missing {len(self.missing)}: {self.missing[:5]}")
        if self.spurious:
            parts.append(f"  spurious {len(self.spurious)}: {self.spurious[:5]}")
        return "\n".join(parts)


@dataclass
class VerifyReport:
    passed: bool
    queries: int
    mismatches: list[Mismatch]

    def summary(self) -> str:
        if self.passed:
            return f"PASS ({self.queries} queries, all algorithms exact)"
        head = f"FAIL ({len(self.mismatches)} mismatching queries)"
        return "\n".join([head] + [m.describe() for m in self.mismatches[:10]])


def verify(engines: dict, graph: RoadGraph, workload: QueryWorkload,
           threads: int = 1, stop_on_first: bool = False) -> VerifyReport:
    """Run every engine against the oracle on every workload item."""
    mismatches: list[Mismatch] = []
    for source, tau in workload.items:
        want = brute_force_isochrone(graph, source, tau)
        want_pairs = None
        for name, engine in engines.items():
            got = engine.query(source, tau, threads=threads).edges
            if got != want:
                if want_pairs is None:
                    want_pairs = want.as_pairs(graph)
                got_pairs = got.as_pairs(graph)
                mismatches.append(Mismatch(
                    algo=name, source=source, tau=tau,
                    missing=sorted(want_pairs - got_pairs),
                    spurious=sorted(got_pairs - want_pairs),
                ))
                if stop_on_first:
                    return VerifyReport(False, len(workload.items), mismatches)
    return VerifyReport(not mismatches, len(workload.items), mismatches)


@dataclass
class BenchRecord:
    algo: str
    tau_s: int
    threads: int
    settled: float
    active_cells: float
    t_upward_ms: float
    t_scan_ms: float
    t_total_ms: float
    result_hash: str

    def row(self) -> list:
        return [self.algo, self.tau_s, self.threads,
                round(self.settled, 1), round(self.active_cells, 1),
                round(self.t_upward_ms, 4), round(self.t_scan_ms, 4),
                round(self.t_total_ms, 4), self.result_hash]


def bench(engines: dict, workload: QueryWorkload, threads: int = 1,
          aggregate: str = "median") -> list[BenchRecord]:
    """Timing run: one record per (algorithm, tau); the result hash folds
    the per-query hashes in workload order, so it is identical across
    algorithms and thread counts exactly when the edge sets are."""
    agg = statistics.median if aggregate == "median" else statistics.fmean
    records = []
    for name, engine in engines.items():
        for tau in workload.tau_list_s:
            times, ups, scans, settled, cells = [], [], [], [], []
            fold = hashlib.sha256()
            for s in workload.sources:
                res = engine.query(s, tau, threads=threads)
                times.append(res.stats.t_total_ms)
                ups.append(res.stats.t_upward_ms)
                scans.append(res.stats.t_scan_ms)
                settled.append(res.stats.settled)
                cells.append(res.stats.active_cells)
                fold.update(res.edges.content_hash().encode())
            records.append(BenchRecord(
                algo=name, tau_s=tau, threads=threads,
                settled=statistics.fmean(settled),
                active_cells=statistics.fmean(cells),
                t_upward_ms=agg(ups), t_scan_ms=agg(scans),
                t_total_ms=agg(times),
                result_hash=fold.hexdigest()[:16],
            ))
    return records


def records_to_csv(records: list[BenchRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(CSV_HEADER.split(","))
    for r in records:
        writer.writerow(r.row())
    return buf.getvalue()
