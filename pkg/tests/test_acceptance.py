"""Acceptance criteria. Each test records one PASS/FAIL line, shown in the terminal summary."""

import io
import ipaddress
import json
import math
import os
import random
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import mrtwriter as w
from conftest import ACCEPTANCE_LINES
from graphs import random_graph
from oracles import (
    LinearScanLPM,
    brute_force_adjacencies,
    burden_from,
    dense_eigencentrality,
    floyd_warshall,
    layered_descendants,
    triangle_clustering,
    bfs_distances,
)
from topofunnel import synthetic
from topofunnel.adjacency import PathRejected, infer_bgp_adjacencies, sanitize_path
from topofunnel.config import load_config
from topofunnel.graph import Graph
from topofunnel.graphio import FORMATS, export_graph, import_graph
from topofunnel.metrics import (
    average_path_length,
    cumulative_downstream_burden,
    eccentricity,
    eigencentrality,
    funnel_layers,
    funnel_profile,
)
from topofunnel.metrics.paths import local_clustering
from topofunnel.parsers import TruncatedError, parse_mrt
from topofunnel.pipeline import EXIT_OK, run_pipeline
from topofunnel.prefixtrie import PrefixTrie
from topofunnel.records import PathSegment, RawRibRecord, RoaRecord, SegmentKind, as_set, sequence
from topofunnel.rib import RibSnapshot, Validity, roa_index, validate_origin

AS_TRANS = 23456


def verdict(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


# 1. MRT fixtures

T = 1685577600
PEER = "203.0.113.1"


def _mrt(prefix_entries, peers, subtype_records=()):
    out = w.record(T, w.TABLE_DUMP_V2, w.PEER_INDEX_TABLE, w.peer_index_table(peers))
    for seq, (prefix, entries) in enumerate(prefix_entries):
        subtype, body = w.rib_entry_record(seq, prefix, entries)
        out += w.record(T, w.TABLE_DUMP_V2, subtype, body)
    return out


def _expect(prefix, peer_as, segments, peer=PEER, originated=T):
    return RawRibRecord("c", ipaddress.ip_address(peer), peer_as, ipaddress.ip_network(prefix),
                        tuple(segments), originated, T)


def test_criterion_01_mrt_fixtures():
    start = time.perf_counter()
    checks = []
    seq = w.path_attributes([(w.AS_SEQUENCE, [65001, 65002])])
    one_peer = _mrt([("192.0.2.0/24", [(0, T, seq)]), ("198.51.100.0/24", [(0, T, seq)])], [(PEER, 65001)])
    checks.append(list(parse_mrt(io.BytesIO(one_peer), "c")) == [
        _expect("192.0.2.0/24", 65001, [sequence(65001, 65002)]),
        _expect("198.51.100.0/24", 65001, [sequence(65001, 65002)])])

    as4 = w.path_attributes([(w.AS_SEQUENCE, [4200000001, 196608, 4294967294])])
    data = _mrt([("2001:db8::/32", [(0, T, as4)])], [("2001:db8::1", 4200000001)])
    checks.append(list(parse_mrt(io.BytesIO(data), "c")) == [
        _expect("2001:db8::/32", 4200000001, [sequence(4200000001, 196608, 4294967294)], peer="2001:db8::1")])

    legacy_attrs = w.path_attributes([(w.AS_SEQUENCE, [65001, AS_TRANS])], width=2,
                                     as4=[(w.AS_SEQUENCE, [4200000009])])
    subtype, body = w.legacy_entry("192.0.2.0/24", PEER, 65001, T, legacy_attrs)
    checks.append(list(parse_mrt(io.BytesIO(w.record(T, w.TABLE_DUMP, subtype, body)), "c")) == [
        _expect("192.0.2.0/24", 65001, [sequence(65001, 4200000009)])])

    with_set = w.path_attributes([(w.AS_SEQUENCE, [65001]), (w.AS_SET, [65003, 65004])])
    data = _mrt([("192.0.2.0/24", [(0, T, with_set)])], [(PEER, 65001)])
    checks.append(list(parse_mrt(io.BytesIO(data), "c")) == [
        _expect("192.0.2.0/24", 65001, [sequence(65001), as_set(65003, 65004)])])

    subtype, body = w.rib_entry_record(7, "203.0.113.0/24", [(0, T, seq)])
    tail = w.record(T, w.TABLE_DUMP_V2, subtype, body)
    got = []
    offset = None
    try:
        for rec in parse_mrt(io.BytesIO(one_peer + tail[:-5]), "c"):
            got.append(rec)
    except TruncatedError as exc:
        offset = exc.offset
    checks.append(offset == len(one_peer) and len(got) == 2)
    elapsed = time.perf_counter() - start
    verdict(1, all(checks) and elapsed < 1.0,
            f"{sum(checks)}/{len(checks)} fixtures exact, truncation offset {offset}, {elapsed:.3f}s (< 1s)")


# 2. adjacency oracle


def _random_snapshot(rng):
    records = []
    for i in range(rng.randint(0, 1000)):
        segs = []
        for _ in range(rng.randint(1, 3)):
            if rng.random() < 0.15:
                segs.append(as_set(*rng.sample(range(1, 60), rng.randint(0, 3))))
            else:
                path = [rng.randrange(1, 60) if rng.random() > 0.05 else AS_TRANS for _ in range(rng.randint(0, 7))]
                if path and rng.random() < 0.25:
                    path.insert(rng.randrange(len(path)), path[rng.randrange(len(path))])
                segs.append(sequence(*path))
        records.append(RawRibRecord(rng.choice(["a", "b"]), ipaddress.ip_address(f"10.0.{i // 250}.{i % 250 + 1}"),
                                    rng.choice([0, AS_TRANS] + list(range(1, 60))),
                                    ipaddress.ip_network(f"192.0.{i % 256}.0/24"), tuple(segs), T, T))
    return RibSnapshot(T, 3600, tuple(records), {})


path_strategy = st.lists(
    st.one_of(
        st.builds(lambda a: PathSegment(SegmentKind.SEQUENCE, tuple(a)),
                  st.lists(st.sampled_from([1, 2, 3, 4, 5, AS_TRANS]), max_size=8)),
        st.builds(lambda a: PathSegment(SegmentKind.SET, tuple(a)), st.lists(st.integers(1, 5), max_size=3)),
    ),
    max_size=4,
)


def test_criterion_02_adjacency_oracle():
    rng = random.Random(2024)
    mismatches = 0
    for _ in range(200):
        snap = _random_snapshot(rng)
        if set(infer_bgp_adjacencies(snap)) != brute_force_adjacencies(snap.records):
            mismatches += 1

    violations = []

    @settings(max_examples=500, deadline=None, database=None)
    @given(path_strategy)
    def sanitize_holds(segments):
        try:
            fragments = sanitize_path(segments)
        except PathRejected:
            return
        members = [a for f in fragments for a in f]
        if AS_TRANS in members or len(members) != len(set(members)) or any(
                a == b for f in fragments for a, b in zip(f, f[1:])):
            violations.append(segments)

    sanitize_holds()
    loop_rejected = False
    try:
        sanitize_path([sequence(65001, 65002, 65001)])
    except PathRejected as exc:
        loop_rejected = exc.reason == "loop"
    verdict(2, mismatches == 0 and not violations and loop_rejected,
            f"200 snapshots, {mismatches} mismatches vs brute force; sanitize properties "
            f"{'hold' if not violations else 'violated'}; loop rejected={loop_rejected}")


# 3. LPM


def test_criterion_03_lpm_oracle():
    rng = random.Random(3)
    table = {}
    while len(table) < 1000:
        length = rng.randint(8, 30)
        base = rng.getrandbits(32) & 0xC0FFFFFF
        table[ipaddress.IPv4Network((base >> (32 - length) << (32 - length), length))] = len(table)
    trie = PrefixTrie()
    for net, v in table.items():
        trie.insert(net, v)
    oracle = LinearScanLPM(table)
    nets = list(table)
    mismatches = 0
    for i in range(10_000):
        if i % 2:
            net = rng.choice(nets)
            addr = net.network_address + rng.randrange(net.num_addresses)
        else:
            addr = ipaddress.IPv4Address(rng.getrandbits(32) & 0xC0FFFFFF)
        mismatches += trie.lookup(addr) != oracle.lookup(addr)
    verdict(3, mismatches == 0, f"10000 lookups against 1000 prefixes, {mismatches} mismatches")


# 4. RPKI


def _rov_truth(prefix, origin, roas):
    covering = [r for r in roas if r.prefix.version == prefix.version and prefix.subnet_of(r.prefix)]
    if not covering:
        return Validity.NOT_FOUND
    if any(r.asn == origin and r.asn != 0 and prefix.prefixlen <= r.max_length for r in covering):
        return Validity.VALID
    return Validity.INVALID


def test_criterion_04_rpki_truth_table():
    net = ipaddress.ip_network
    fixtures = [
        ([RoaRecord(65002, net("192.0.2.0/24"), 24)], "192.0.2.0/24", 65002, Validity.VALID),
        ([RoaRecord(65002, net("192.0.2.0/24"), 24)], "192.0.2.0/24", 65009, Validity.INVALID),
        ([RoaRecord(65002, net("192.0.2.0/24"), 24)], "198.51.100.0/24", 65002, Validity.NOT_FOUND),
        ([RoaRecord(65002, net("192.0.2.0/24"), 24)], "192.0.2.128/25", 65002, Validity.INVALID),
        ([RoaRecord(65002, net("192.0.0.0/22"), 24)], "192.0.2.0/24", 65002, Validity.VALID),
        ([RoaRecord(0, net("192.0.2.0/24"), 32)], "192.0.2.0/24", 0, Validity.INVALID),
        ([], "192.0.2.0/24", 65002, Validity.NOT_FOUND),
    ]
    failures = sum(validate_origin(net(p), o, roa_index(r)) is not want for r, p, o, want in fixtures)
    # exhaustive: every prefix /20../24 of a /20, every origin, against overlapping ROAs
    roas = [RoaRecord(1, net("10.0.0.0/22"), 23), RoaRecord(2, net("10.0.2.0/23"), 24),
            RoaRecord(0, net("10.0.1.0/24"), 24), RoaRecord(3, net("10.0.8.0/21"), 21)]
    index = roa_index(roas)
    cases = 0
    for length in range(20, 25):
        for p in net("10.0.0.0/20").subnets(new_prefix=length):
            for origin in (0, 1, 2, 3, 4):
                cases += 1
                failures += validate_origin(p, origin, index) is not _rov_truth(p, origin, roas)
    seen = {validate_origin(p, o, index) for length in range(20, 25)
            for p in net("10.0.0.0/20").subnets(new_prefix=length) for o in (1, 4)}
    ok = failures == 0 and seen == set(Validity)
    verdict(4, ok, f"{len(fixtures)} fixtures + {cases} exhaustive cases, {failures} failures, "
                   f"states covered {sorted(s.value for s in seen)}")


# 5. eigencentrality


def test_criterion_05_eigencentrality():
    start = time.perf_counter()
    rng = random.Random(5)
    worst = 0.0
    for _ in range(100):
        n = rng.randint(2, 50)
        edges = random_graph(rng, n, rng.uniform(0.02, 0.3), connected=True)
        got = eigencentrality(Graph(edges, range(n))).scores
        worst = max(worst, float(np.max(np.abs(got - dense_eigencentrality(n, edges)))))
    star = eigencentrality(Graph([(0, 1), (0, 2), (0, 3)])).scores
    path = eigencentrality(Graph([(1, 2), (2, 3)])).scores
    star_err = float(np.max(np.abs(star - [1, 1 / math.sqrt(3), 1 / math.sqrt(3), 1 / math.sqrt(3)])))
    path_err = float(np.max(np.abs(path - [1 / math.sqrt(2), 1, 1 / math.sqrt(2)])))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-6 and star_err < 1e-6 and path_err < 1e-6 and elapsed < 10
    verdict(5, ok, f"max L-inf error {worst:.2e} over 100 graphs; star {star_err:.1e}, path {path_err:.1e}; "
                   f"{elapsed:.2f}s (< 10s)")


# 6. eccentricity, clustering, path length


def test_criterion_06_distance_and_clustering():
    rng = random.Random(6)
    bad = {"eccentricity": 0, "clustering": 0, "path_length": 0}
    for _ in range(50):
        n = rng.randint(2, 200)
        edges = random_graph(rng, n, rng.uniform(1 / n, 6 / n))
        g = Graph(edges, range(n))
        d = floyd_warshall(n, edges)
        bad["eccentricity"] += list(eccentricity(g)) != list(np.where(np.isinf(d), 0, d).max(axis=1).astype(int))
        bad["clustering"] += not np.allclose(local_clustering(g), triangle_clustering(n, edges), rtol=0, atol=1e-12)
        comps = {frozenset(bfs_distances(n, edges, v)) for v in range(n)}
        big = max(comps, key=lambda c: (len(c), -min(c)))
        est = average_path_length(g)
        if len(big) >= 2:
            exact = sum(sum(bfs_distances(n, edges, v).values()) for v in big) / (len(big) * (len(big) - 1))
            bad["path_length"] += not (est.exact and abs(est.mean - exact) < 1e-12)
    verdict(6, not any(bad.values()), f"50 trials each, mismatches {bad}")


# 7. funnelling


def test_criterion_07_funnelling():
    star = funnel_profile(Graph([(1, 101), (1, 102), (1, 2), (1, 3), (1, 4)],
                                country={1: "X", 2: "X", 3: "X", 4: "X", 101: "F", 102: "F"}), "X")
    mesh = cumulative_downstream_burden(Graph([(1, 101), (2, 101), (1, 2)], country={1: "X", 2: "X", 101: "F"}), "X")
    parallel = cumulative_downstream_burden(
        Graph([(101, 1), (1, 2), (101, 3), (3, 4)], country={1: "X", 2: "X", 3: "X", 4: "X", 101: "F"}), "X")
    fixtures_ok = (star.layers == (2, 1, 3) and star.relative_changes == (-0.5, 2.0) and star.burden == (3.0,)
                   and mesh == [] and parallel[:1] == [0.5])
    rng = random.Random(7)
    mismatches = 0
    for _ in range(500):
        n = rng.randint(2, 30)
        edges = random_graph(rng, n, rng.uniform(0.05, 0.3))
        country = {v: rng.choice("XXY") for v in range(n)}
        g = Graph(edges, range(n), country)
        layers, desc = layered_descendants(n, edges, {v for v in range(n) if country[v] == "X"})
        got_layers = [list(x) for x in funnel_layers(g, "X").members]
        expected = burden_from(layers, desc)
        got = cumulative_downstream_burden(g, "X")
        mismatches += got_layers != layers or len(got) != len(expected) or any(
            abs(a - b) > 1e-12 for a, b in zip(got, expected))
    verdict(7, fixtures_ok and mismatches == 0,
            f"star {list(star.layers)}/{list(star.relative_changes)}/{list(star.burden)}, mesh {mesh}, "
            f"parallel hop-1 {parallel[:1]}; {mismatches}/500 oracle mismatches")


# 8. end-to-end synthetic scenario


def test_criterion_08_end_to_end(tmp_path):
    start = time.perf_counter()
    scen = synthetic.generate(tmp_path / "fixture")
    cfg = load_config(scen.config).with_overrides(out_dir=tmp_path / "out")
    codes = [run_pipeline(cfg, stage) for stage in ("build", "analyze", "layout", "report")]
    elapsed = time.perf_counter() - start
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    burden = {c: v["hop1_burden"] for c, v in report["countries"].items()}
    ranked = sorted(burden, key=burden.get, reverse=True)
    strictly_top = burden["XA"] > max(v for c, v in burden.items() if c != "XA")
    mesh_lowest = burden["XB"] == min(burden.values())
    (corr,) = [r for r in report["correlations"] if r["metric"] == "hop1_burden" and r["indicator"] == "v2mecenefi"]
    sign_ok = corr["r"] is not None and math.copysign(1, corr["r"]) == synthetic.PLANTED_SIGN
    ok = codes == [EXIT_OK] * 4 and strictly_top and mesh_lowest and sign_ok and elapsed < 30
    verdict(8, ok, f"hop-1 burden ranking {ranked} ({', '.join(f'{c}={burden[c]:.3g}' for c in ranked)}); "
                   f"r(v2mecenefi, hop1_burden)={corr['r']:.3f} over {corr['n']} countries, planted sign "
                   f"{synthetic.PLANTED_SIGN:+d}; {elapsed:.1f}s (< 30s)")


# 9. determinism


def test_criterion_09_determinism(scenario, tmp_path):
    outputs = []
    for run in ("a", "b"):
        cfg = load_config(scenario.config).with_overrides(out_dir=tmp_path / run, seed=11)
        codes = [run_pipeline(cfg, stage) for stage in ("build", "analyze", "layout")]
        assert codes == [EXIT_OK] * 3
        report = json.loads((tmp_path / run / "report.json").read_text())
        report.pop("timings", None)
        outputs.append({
            "snapshot": (tmp_path / run / "snapshot.jsonl").read_bytes(),
            "report": json.dumps(report, sort_keys=True).encode(),
            "report_file": (tmp_path / run / "report.json").read_bytes(),
            "svg": (tmp_path / run / "topology.svg").read_bytes(),
        })
    same = {k: outputs[0][k] == outputs[1][k] for k in outputs[0]}
    verdict(9, all(same.values()), f"byte-identical across two runs: {same}")


# 10. graph round-trip


def _labelled_snapshot():
    from topofunnel.adjacency import AdjacencySet
    from topofunnel.enrichment import AsRecord
    from topofunnel.graph import build_topology

    rng = random.Random(10)
    ccs = ["GB", "FR", "IR", "CN", "ZZ"]
    nodes = {}
    for i in range(1000):
        asn = rng.choice([rng.randint(1, 64495), rng.randint(131072, 4199999999)])
        while asn in nodes:
            asn += 1
        cc = rng.choice(ccs)
        nodes[asn] = AsRecord(asn, cc, rng.choice([None, f"ORG-{i % 97}"]),
                              rng.choice([None, f"Net & <Co> \"{i}\"", "Réseau Ünïcode"]),
                              rng.choice([True, False, None]), frozenset(rng.sample(ccs[:4], rng.randint(0, 2))),
                              {c: rng.random() for c in rng.sample(ccs[:4], rng.randint(0, 3))},
                              bogon=cc == "ZZ" and rng.random() < 0.3)
    asns = sorted(nodes)
    adj = AdjacencySet()
    for i, a in enumerate(asns[1:], 1):
        adj.add(a, asns[rng.randrange(i)], rng.choice(["bgp", "traceroute"]), rng.choice(["rrc00", "probe:7"]))
    for _ in range(1500):
        a, b = rng.sample(asns, 2)
        adj.add(a, b, rng.choice(["bgp", "traceroute"]), rng.choice([None, "route-views2"]))
    return build_topology(adj, nodes, T, {"records": 1, "note": "x < y & z"})


def test_criterion_10_graph_round_trip(tmp_path):
    snap = _labelled_snapshot()
    results = {fmt: import_graph(export_graph(snap, tmp_path / f"g.{fmt}")) == snap for fmt in FORMATS}
    verdict(10, len(snap.nodes) == 1000 and all(results.values()),
            f"{len(snap.nodes)} nodes / {len(snap.edges)} edges, identity per format {results}")


# 11. optional networked integration (not gating)

ROUTEVIEWS_URL = "https://archive.routeviews.org/bgpdata/2023.06/RIBS/rib.20230601.0000.bz2"


@pytest.mark.skipif(not os.environ.get("TOPOFUNNEL_NETWORK"), reason="set TOPOFUNNEL_NETWORK=1 to download a real RIB")
def test_criterion_11_routeviews_rib(tmp_path):
    from topofunnel.acquisition import FetchItem, fetch_and_decompress
    from topofunnel.records import ParseStats
    from topofunnel.rib import normalize

    item = FetchItem("routeviews", "route-views2", ROUTEVIEWS_URL, "bzip2", T)
    data = fetch_and_decompress(item, os.environ.get("TOPOFUNNEL_CACHE", tmp_path), timeout=600).data
    stats = ParseStats()
    records = list(parse_mrt(io.BytesIO(data), "route-views2", strict=False, stats=stats))
    adj = infer_bgp_adjacencies(normalize(records, T, 4 * 3600))
    nodes = len(adj.nodes())
    line = (f"criterion 11: INFO  {len(records)} records ({stats.errored} errored), {nodes} ASes, {len(adj)} edges "
            f"from one collector (full multi-source capture: 82,593 ASes / 176,422 edges)")
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert records
