import json

import pytest

from isoroute import assembly
from isoroute.bench import bench, gen_workload, records_to_csv, splitmix64, verify
from isoroute.cli import main
from isoroute.customization import customize


def test_splitmix_deterministic():
    s1, v1 = splitmix64(42)
    s2, v2 = splitmix64(42)
    assert (s1, v1) == (s2, v2)
    assert v1 != splitmix64(s1)[1]


def test_workload_reproducible():
    a = gen_workload(100, 10, seed=7, tau_list_s=[600, 30000])
    b = gen_workload(100, 10, seed=7, tau_list_s=[600, 30000])
    assert a.items == b.items
    assert len(a.items) == 20
    assert all(0 <= s < 100 for s, _ in a.items)


def test_workload_cross_product():
    w = gen_workload(50, 1000, seed=3, tau_list_s=[1, 2, 3, 4])
    assert len(w.items) == 4000


def test_workload_rejects_empty():
    with pytest.raises(ValueError):
        gen_workload(10, 0, 1, [60])


def test_tau_minutes_to_seconds():
    w = gen_workload(10, 2, 1, [100 * 60, 500 * 60])
    assert w.tau_list_s == [6000, 30000]


@pytest.fixture(scope="module")
def small_ds(tmp_path_factory):
    from isoroute.synth import synth_road_network

    graph, coords = synth_road_network(14, 14, seed=2, oneway_fraction=0.05)
    ds = assembly.build_dataset(
        graph, coords, list(assembly.ALL_ALGOS),
        cells={"isophast-cd": 8, "isophast-cp": 8, "isophast-dt": 8},
        compress=16,
    )
    return ds


def test_verify_pass(small_ds):
    engines = small_ds.build_engines()
    assert set(engines) == set(assembly.ALL_ALGOS)
    w = gen_workload(small_ds.graph.n, 4, seed=5, tau_list_s=[60, 600, 6000])
    report = verify(engines, small_ds.graph, w)
    assert report.passed, report.summary()
    assert "PASS" in report.summary()


def test_verify_detects_fault_injection(small_ds):
    engines = small_ds.build_engines(["isocrp"])
    # corrupt the eccentricity column: cells wrongly report full coverage
    data = small_ds.mld["isocrp"]
    saved = data.overlay.ecc_r_all.copy()
    data.overlay.ecc_r_all[:] = 0
    try:
        w = gen_workload(small_ds.graph.n, 6, seed=9, tau_list_s=[600])
        report = verify(engines, small_ds.graph, w)
        assert not report.passed
        assert any(m.missing for m in report.mismatches)
        assert "FAIL" in report.summary()
    finally:
        data.overlay.ecc_r_all[:] = saved


def test_bench_rows_and_hash_consistency(small_ds):
    engines = small_ds.build_engines(["isodijkstra", "isocrp", "isophast-cd"])
    w = gen_workload(small_ds.graph.n, 3, seed=11, tau_list_s=[600, 3000])
    records = bench(engines, w, threads=1)
    assert len(records) == 3 * 2
    by_tau = {}
    for r in records:
        by_tau.setdefault(r.tau_s, set()).add(r.result_hash)
    for tau, hashes in by_tau.items():
        assert len(hashes) == 1  # identical results across algorithms
    csv_text = records_to_csv(records)
    assert csv_text.splitlines()[0] == (
        "algo,tau_s,threads,settled,active_cells,"
        "t_upward_ms,t_scan_ms,t_total_ms,result_hash"
    )
    assert len(csv_text.splitlines()) == 7


def test_bench_thread_counts_same_hash(small_ds):
    engines = small_ds.build_engines(["isocrp", "isophast-dt"])
    w = gen_workload(small_ds.graph.n, 3, seed=13, tau_list_s=[3000])
    h = {}
    for th in (1, 2, 4):
        for r in bench(engines, w, threads=th):
            h.setdefault((r.algo, r.tau_s), set()).add(r.result_hash)
    assert all(len(v) == 1 for v in h.values())


# --- CLI end-to-end ------------------------------------------------------

@pytest.fixture(scope="module")
def cli_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    gr = root / "net.gr"
    co = root / "net.co"
    main(["gen-graph", "--width", "12", "--height", "12", "--seed", "4",
          "--out-gr", str(gr), "--out-co", str(co)])
    return root, gr, co


def test_cli_build_partition_and_customize(cli_files):
    root, gr, co = cli_files
    mlp = root / "net.mlp"
    main(["build-partition", "--graph", str(gr), "--coords", str(co),
          "--max-cell-sizes", "12,48", "--out", str(mlp)])
    assert mlp.exists()
    cust = root / "net.crp.cust"
    main(["customize", "--graph", str(gr), "--partition", str(mlp),
          "--algo", "isocrp", "--ecc-mode", "sep", "--out", str(cust)])
    ds = assembly.Dataset.load(str(cust))
    assert "isocrp" in ds.mld


def test_cli_prepro_query_bench(cli_files, capsys):
    root, gr, co = cli_files
    pre = root / "net.cd.pre"
    main(["prepro", "--graph", str(gr), "--coords", str(co), "--algo", "cd",
          "--cells", "6", "--out", str(pre)])
    main(["query", "--data", str(pre), "--algo", "isophast-cd",
          "--source", "1", "--tau-min", "5"])
    out = capsys.readouterr().out
    lines = [ln for ln in out.splitlines() if ln and not ln.startswith("#")
             and not ln.startswith("wrote")]
    for ln in lines:
        t, h, d = ln.split()
        assert d in ("in_out", "out_in")
    csvf = root / "bench.csv"
    main(["bench", "--data", str(pre), "--algos", "isodijkstra,isophast-cd",
          "--queries", "2", "--seed", "3", "--tau-min-list", "5,10",
          "--csv", str(csvf)])
    text = csvf.read_text().splitlines()
    assert len(text) == 1 + 2 * 2


def test_cli_prepro_dt_with_mlp_needs_level(cli_files):
    root, gr, co = cli_files
    mlp = root / "net2.mlp"
    main(["build-partition", "--graph", str(gr), "--coords", str(co),
          "--max-cell-sizes", "12,48", "--out", str(mlp)])
    with pytest.raises(ValueError, match="level"):
        main(["prepro", "--graph", str(gr), "--partition", str(mlp),
              "--algo", "dt", "--out", str(root / "x.pre")])
    main(["prepro", "--graph", str(gr), "--partition", str(mlp), "--level",
          "1", "--algo", "dt", "--compress", "8",
          "--out", str(root / "net.dt.pre")])


def test_cli_verify(cli_files, capsys):
    root, gr, co = cli_files
    main(["verify", "--graph", str(gr), "--coords", str(co),
          "--algos", "isodijkstra,isocrp,isograsp", "--queries", "3",
          "--seed", "2", "--tau-min-list", "2,8"])
    assert "PASS" in capsys.readouterr().out


def test_cli_verify_without_coords(cli_files, capsys):
    # pseudo-coordinates stand in when no .co file is given
    root, gr, co = cli_files
    main(["verify", "--graph", str(gr), "--algos", "isocrp", "--queries",
          "2", "--seed", "2", "--tau-min-list", "5"])
    assert "PASS" in capsys.readouterr().out


def test_cli_bench_sweep(cli_files):
    root, gr, co = cli_files
    pre = root / "sweep.cd.pre"
    main(["prepro", "--graph", str(gr), "--coords", str(co), "--algo", "cd",
          "--cells", "4", "--out", str(pre)])
    csvf = root / "sweep.csv"
    main(["bench", "--data", str(pre), "--algos", "isophast-cd",
          "--queries", "2", "--seed", "3", "--tau-min-list", "5",
          "--sweep-cells", "4,9", "--csv", str(csvf)])
    rows = csvf.read_text().splitlines()
    assert len(rows) == 1 + 2  # header + one row per swept cell count
    assert "isophast-cd[k=4]" in rows[1]


def test_cli_serve_config_parsing(cli_files, tmp_path):
    import json

    from isoroute.cli import build_parser

    root, gr, co = cli_files
    cfg = tmp_path / "serve.json"
    cfg.write_text(json.dumps({
        "data": "x.bundle", "coords": str(co),
        "algorithms": ["isocrp"], "port": 9000, "threads": 2,
    }))
    args = build_parser().parse_args(["serve", "--config", str(cfg)])
    assert args.config == str(cfg)
