"""Command-line driver: build, customize, preprocess, verify, benchmark,
query, and serve."""

from __future__ import annotations

import argparse
import sys

from . import assembly
from .assembly import ALL_ALGOS, Dataset, MLD_ALGOS, PHAST_ALGOS
from .bench import bench, gen_workload, records_to_csv, verify
from .customization import ECC_MODES
from .graph import serialize_dimacs_co, serialize_dimacs_gr
from .partition import (
    MultilevelPartition,
    build_multilevel_partition,
    derive_edge_partition,
    save_partition,
    single_level_partition,
)


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def _tau_seconds(minutes: list[int]) -> list[int]:
    return [60 * m for m in minutes]


def _algo_list(text: str) -> list[str]:
    if text == "all":
        return list(ALL_ALGOS)
    names = [a.strip() for a in text.split(",") if a.strip()]
    for a in names:
        if a not in ALL_ALGOS:
            raise SystemExit(f"unknown algorithm {a!r}; choose from {ALL_ALGOS}")
    return names


def cmd_build_partition(args):
    graph, coords = assembly.load_graph(args.graph, args.coords)
    mlp = build_multilevel_partition(graph, coords, _int_list(args.max_cell_sizes))
    save_partition(mlp, args.out)
    counts = ", ".join(str(c) for c in mlp.counts)
    print(f"wrote {args.out}: {mlp.levels} levels, cells per level: {counts}")


def cmd_customize(args):
    graph, _ = assembly.load_graph(args.graph)
    from .partition import load_partition

    mlp = load_partition(args.partition, graph)
    if not isinstance(mlp, MultilevelPartition):
        raise SystemExit("customize needs a multilevel partition file")
    data = assembly.build_mld(graph, mlp, args.algo, args.ecc_mode,
                              threads=args.threads)
    ds = Dataset(graph=graph, mld={args.algo: data})
    ds.save(args.out)
    print(f"wrote {args.out}: {args.algo} with ecc mode {args.ecc_mode}")


def cmd_prepro(args):
    graph, coords = assembly.load_graph(args.graph, args.coords)
    algo = {"cd": "isophast-cd", "cp": "isophast-cp", "dt": "isophast-dt"}[args.algo]
    if args.partition:
        part = assembly.resolve_partition(
            args.partition, graph, args.level, for_dt=(args.algo == "dt")
        )
    else:
        if coords is None:
            coords = assembly.pseudo_coordinates(graph)
        k = args.cells or assembly.default_phast_cells(graph.n, algo)
        cell_of = single_level_partition(graph, coords, k)
        if args.algo == "dt":
            part = derive_edge_partition(
                graph, MultilevelPartition(cells=cell_of.reshape(1, -1)), 1
            )
        else:
            part = cell_of
    compress = args.compress
    if compress is None and args.algo == "dt":
        compress = assembly.default_compress(graph.n)
    data = assembly.build_phast(graph, part, algo,
                                compress=compress or 0, threads=args.threads)
    ds = Dataset(graph=graph, coords=coords, phast={algo: data})
    ds.save(args.out)
    print(f"wrote {args.out}: {algo}")


def cmd_query(args):
    ds = Dataset.load_many(args.data.split(","))
    engines = ds.build_engines([args.algo])
    res = engines[args.algo].query(args.source - 1, args.tau_min * 60,
                                   threads=args.threads)
    for line in res.edges.to_lines(ds.graph):
        print(line)
    s = res.stats
    print(f"# edges={len(res.edges)} settled={s.settled} "
          f"active_cells={s.active_cells} t_total_ms={s.t_total_ms:.3f}",
          file=sys.stderr)


def cmd_verify(args):
    graph, coords = assembly.load_graph(args.graph, args.coords)
    algos = _algo_list(args.algos)
    ds = assembly.build_dataset(graph, coords, algos,
                                ecc_mode=args.ecc_mode, threads=args.threads)
    engines = ds.build_engines(algos)
    workload = gen_workload(graph.n, args.queries, args.seed,
                            _tau_seconds(_int_list(args.tau_min_list)))
    report = verify(engines, graph, workload)
    print(report.summary())
    if not report.passed:
        raise SystemExit(1)


def cmd_bench(args):
    ds = Dataset.load_many(args.data.split(","))
    algos = _algo_list(args.algos)
    workload = gen_workload(ds.graph.n, args.queries, args.seed,
                            _tau_seconds(_int_list(args.tau_min_list)))
    records = []
    base_algos = [a for a in algos
                  if not (args.sweep_cells and a in PHAST_ALGOS)]
    if base_algos:
        engines = ds.build_engines(base_algos)
        records += bench(engines, workload, threads=args.threads)
    if args.sweep_cells:
        # parameter sweep: rebuild each contraction strategy per cell
        # count (and compressed-graph size for the table strategy)
        coords = ds.coords or assembly.pseudo_coordinates(ds.graph)
        compress_list = (_int_list(args.sweep_compress)
                         if args.sweep_compress else [None])
        for a in (x for x in algos if x in PHAST_ALGOS):
            for k in _int_list(args.sweep_cells):
                cs = compress_list if a == "isophast-dt" else [None]
                for C in cs:
                    sub = assembly.build_dataset(
                        ds.graph, coords, [a],
                        cells={a: k}, compress=C, threads=args.threads,
                    )
                    tag = f"{a}[k={k}" + (f",C={C}]" if C is not None else "]")
                    eng = sub.build_engines([a])
                    for rec in bench(eng, workload, threads=args.threads):
                        rec.algo = tag
                        records.append(rec)
    csv_text = records_to_csv(records)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(csv_text)
        print(f"wrote {args.csv} ({len(records)} rows)")
    else:
        print(csv_text, end="")


def cmd_serve(args):
    import json

    import uvicorn

    from .service import EngineRegistry, create_app

    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
        args.data = cfg.get("data", args.data)
        args.coords = cfg.get("coords", args.coords)
        args.algo = cfg.get("algorithms", args.algo)
        if isinstance(args.algo, list):
            args.algo = ",".join(args.algo)
        args.port = cfg.get("port", args.port)
        args.threads = cfg.get("threads", args.threads)
    if not args.data:
        raise SystemExit("serve needs --data or a --config file naming it")
    ds = Dataset.load_many(args.data.split(","))
    if args.coords:
        from .graph import parse_dimacs_co

        with open(args.coords) as fh:
            ds.coords = parse_dimacs_co(fh, expected_n=ds.graph.n)
    if ds.coords is None:
        raise SystemExit("serving needs coordinates (--coords or a bundle "
                         "built with them)")
    names = ds.algorithms() if args.algo == "all" else args.algo.split(",")
    registry = EngineRegistry(ds.graph, ds.coords, ds.build_engines(names),
                              threads=args.threads)
    app = create_app(registry)
    print(f"serving {sorted(registry.engines)} on :{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


def cmd_gen_graph(args):
    from .synth import synth_road_network

    graph, coords = synth_road_network(
        args.width, args.height, seed=args.seed,
        oneway_fraction=args.oneway_fraction,
    )
    with open(args.out_gr, "w") as fh:
        fh.write(serialize_dimacs_gr(graph))
    with open(args.out_co, "w") as fh:
        fh.write(serialize_dimacs_co(coords))
    print(f"wrote {args.out_gr} / {args.out_co}: n={graph.n} m={graph.m}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="isoroute",
        description="road-network isochrone engine: preprocessing, "
                    "verification, benchmarks, and the HTTP map service",
    )
    sub = p.add_subparsers(dest="command", required=True)

    bp = sub.add_parser("build-partition",
                        help="nested geometric partition from coordinates")
    bp.add_argument("--graph", required=True)
    bp.add_argument("--coords", required=True)
    bp.add_argument("--max-cell-sizes", required=True,
                    help="comma-separated, strictly increasing, one per level")
    bp.add_argument("--out", required=True)
    bp.set_defaults(func=cmd_build_partition)

    cu = sub.add_parser("customize",
                        help="metric customization for the multilevel engines")
    cu.add_argument("--graph", required=True)
    cu.add_argument("--partition", required=True)
    cu.add_argument("--algo", choices=list(MLD_ALGOS), required=True)
    cu.add_argument("--ecc-mode", choices=list(ECC_MODES), default="sep")
    cu.add_argument("--threads", type=int, default=2)
    cu.add_argument("--out", required=True)
    cu.set_defaults(func=cmd_customize)

    pr = sub.add_parser("prepro",
                        help="contraction-based preprocessing (cd/cp/dt)")
    pr.add_argument("--graph", required=True)
    pr.add_argument("--partition",
                    help="partition file; multilevel files need --level")
    pr.add_argument("--level", type=int,
                    help="level of a multilevel partition to use")
    pr.add_argument("--coords", help="needed when building with --cells")
    pr.add_argument("--algo", choices=["cd", "cp", "dt"], required=True)
    pr.add_argument("--cells", type=int, help="build a k-cell partition")
    pr.add_argument("--compress", type=int,
                    help="compressed top-graph size (dt)")
    pr.add_argument("--threads", type=int, default=2)
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=cmd_prepro)

    q = sub.add_parser("query", help="run one isochrone query")
    q.add_argument("--data", required=True,
                   help="bundle file(s) from customize/prepro, comma-separated")
    q.add_argument("--algo", required=True)
    q.add_argument("--source", type=int, required=True, help="1-based id")
    q.add_argument("--tau-min", type=int, required=True)
    q.add_argument("--threads", type=int, default=1)
    q.set_defaults(func=cmd_query)

    v = sub.add_parser("verify",
                       help="compare every algorithm against the oracle")
    v.add_argument("--graph", required=True)
    v.add_argument("--coords")
    v.add_argument("--algos", default="all")
    v.add_argument("--queries", type=int, default=20)
    v.add_argument("--seed", type=int, default=1)
    v.add_argument("--tau-min-list", default="10,100,500")
    v.add_argument("--ecc-mode", choices=list(ECC_MODES), default="sep")
    v.add_argument("--threads", type=int, default=1)
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="timing runs, CSV output")
    b.add_argument("--data", required=True)
    b.add_argument("--algos", default="all")
    b.add_argument("--queries", type=int, default=100)
    b.add_argument("--seed", type=int, default=1)
    b.add_argument("--tau-min-list", default="10,100,500")
    b.add_argument("--threads", type=int, default=1)
    b.add_argument("--csv")
    b.add_argument("--sweep-cells",
                   help="rebuild contraction strategies per cell count")
    b.add_argument("--sweep-compress",
                   help="compressed-graph sizes for the table strategy sweep")
    b.set_defaults(func=cmd_bench)

    s = sub.add_parser("serve", help="HTTP query service")
    s.add_argument("--data")
    s.add_argument("--config", help="JSON file: data, coords, algorithms, port, threads")
    s.add_argument("--coords")
    s.add_argument("--algo", default="all")
    s.add_argument("--port", type=int, default=8200)
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--threads", type=int, default=1)
    s.set_defaults(func=cmd_serve)

    g = sub.add_parser("gen-graph",
                       help="synthetic road network in DIMACS format")
    g.add_argument("--width", type=int, required=True)
    g.add_argument("--height", type=int, required=True)
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--oneway-fraction", type=float, default=0.05)
    g.add_argument("--out-gr", required=True)
    g.add_argument("--out-co", required=True)
    g.set_defaults(func=cmd_gen_graph)

    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main()
