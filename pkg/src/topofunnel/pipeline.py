"""The fetch → build → analyze → layout → report stages.

Every stage reads its inputs from files and writes its outputs under the
configured output directory, so any stage can be rerun on its own.
``analyze`` and ``layout`` only read local artifacts.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import platform
import time
from collections import Counter
from dataclasses import asdict
from pathlib import Path
from typing import Any, Iterator

import numpy as np
import scipy

from . import __version__, graphio
from .acquisition import (
    RIB_SOURCES,
    DecompressionError,
    FetchError,
    FetchResult,
    TruncationError,
    compression_of,
    decompress,
    fetch_all,
    load_manifest,
    plan_capture,
)
from .adjacency import (
    HopMapStats,
    InferenceStats,
    infer_bgp_adjacencies,
    infer_traceroute_adjacencies,
    merge_adjacency_sets,
    write_adjacency_csv,
)
from .config import ConfigError, PipelineConfig
from .enrichment import (
    ACTIVE_STATUSES,
    ConflictCounter,
    PrefixGeoStats,
    enrich,
    geolocate_pops,
    geolocate_prefixes,
    registry_index,
    write_enrichment_csv,
)
from .graph import Graph, TopologySnapshot, build_topology
from .graphio import SchemaMismatch
from .layout import Styling, force_atlas2, render_svg, write_embedding_csv
from .metrics import (
    ConvergenceError,
    average_path_length,
    clustering_coefficient,
    country_aggregates,
    degree_threshold_curve,
    eccentricity,
    eigencentrality,
    foreign_connectivity,
    funnel_profile,
    pearson_correlation,
)
from .metrics.paths import local_clustering
from .parsers import (
    ParseError,
    parse_as2org,
    parse_atlas_traceroute,
    parse_delegated_extended,
    parse_geolite_blocks,
    parse_mrt,
    parse_roas,
    parse_state_owned,
    parse_text_dump,
    parse_vdem,
)
from .records import ParseStats
from .rib import EmptySnapshotError, build_prefix_origin_table, drop_invalid, extract_peer_ips, normalize, validate_origins

log = logging.getLogger(__name__)

COMMANDS = ("fetch", "build", "analyze", "layout", "report")
REPORT_SCHEMA = "topofunnel.report/1"

SNAPSHOT_FILE = "snapshot.jsonl"
REPORT_FILE = "report.json"
FETCH_FILE = "fetch.json"
TIMINGS_FILE = "timings.json"
MANIFEST_FILE = "manifest.json"
EMBEDDING_FILE = "embedding.csv"
SVG_FILE = "topology.svg"

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class DataError(RuntimeError):
    """Problem with input data or missing artifacts (exit status 2)."""


class MissingArtifact(DataError):
    pass


class ErrorBudgetExceeded(DataError):
    pass


DATA_ERRORS = (DataError, ParseError, EmptySnapshotError, SchemaMismatch, FetchError, DecompressionError,
               TruncationError, ConvergenceError, FileNotFoundError)


# --- helpers ---------------------------------------------------------------

def _read_bytes(path: Path) -> bytes:
    if not path.is_file():
        raise MissingArtifact(f"input file not found: {path}")
    return decompress(path.read_bytes(), compression_of(path.name))


def _text(path: Path) -> io.StringIO:
    return io.StringIO(_read_bytes(path).decode("utf-8"))


def _collector_of(path: Path) -> str:
    return path.name.split(".")[0]


def _clean(value: Any) -> Any:
    """JSON-safe copy: NaN/inf become None, tuples become lists, numpy scalars become Python ones."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        items = sorted(value) if isinstance(value, (set, frozenset)) else value
        return [_clean(v) for v in items]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, Path):
        return str(value)
    return value


def _write_json(path: Path, obj: Any) -> Path:
    path.write_text(json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def _write_csv(path: Path, header: list[str], rows: list[list[Any]]) -> Path:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if v is None or (isinstance(v, float) and not math.isfinite(v)) else v for v in row])
    return path


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _record_timing(out: Path, stage: str, seconds: float) -> None:
    path = out / TIMINGS_FILE
    timings = json.loads(path.read_text()) if path.exists() else {}
    timings[stage] = round(seconds, 6)
    path.write_text(json.dumps(timings, sort_keys=True, indent=2) + "\n")


def _fetched(cfg: PipelineConfig, sources: set[str]) -> list[tuple[str, Path]]:
    """(collector, cached file) pairs from an earlier ``fetch`` run."""
    path = cfg.out_dir / FETCH_FILE
    if not path.exists():
        return []
    listing = json.loads(path.read_text())
    return [(i["collector"], Path(i["path"])) for i in listing["items"] if i["source"] in sources and i.get("ok")]


def _check_budget(cfg: PipelineConfig, stats: ParseStats) -> None:
    if cfg.strict and stats.errored > cfg.error_budget:
        raise ErrorBudgetExceeded(
            f"{stats.errored} record-level errors exceed the budget of {cfg.error_budget}; first: "
            + "; ".join(stats.errors[:3])
        )


def load_snapshot(cfg: PipelineConfig) -> TopologySnapshot:
    path = cfg.out_dir / SNAPSHOT_FILE
    if not path.exists():
        raise MissingArtifact(f"snapshot not found: {path} (run `build` first)")
    return graphio.import_graph(path, "jsonl")


# --- stages ----------------------------------------------------------------

def stage_fetch(cfg: PipelineConfig) -> list[Path]:
    spec = cfg.capture_spec()
    plan = plan_capture(spec, load_manifest(cfg.manifest))
    results = fetch_all(plan, cfg.cache_dir, parallelism=cfg.parallelism)
    items = []
    for item, res in zip(plan.items, results):
        entry = {"source": item.source, "collector": item.collector, "url": item.url,
                 "nominal": item.nominal, "path": str(item.cache_path(cfg.cache_dir))}
        if isinstance(res, FetchResult):
            entry["ok"] = True
        else:
            entry["ok"] = False
            entry["error"] = str(res)
            log.warning("%s", res)
        items.append(entry)
    gaps = [asdict(g) for g in plan.gaps]
    for gap in plan.gaps:
        log.warning("gap: %s %s: %s", gap.source, gap.collector, gap.reason)
    path = _write_json(cfg.out_dir / FETCH_FILE, {"target": spec.target, "items": items, "gaps": gaps})
    if not any(i["ok"] for i in items if i["source"] in RIB_SOURCES) and RIB_SOURCES & set(cfg.sources):
        raise DataError("no RIB dump could be fetched")
    return [path]


def _iter_rib(cfg: PipelineConfig, stats: ParseStats) -> Iterator:
    files = [(_collector_of(p), p) for p in cfg.inputs.rib] or _fetched(cfg, set(RIB_SOURCES))
    if not files:
        raise MissingArtifact("no RIB input: list files under [inputs] rib or run `fetch` first")
    for collector, path in files:
        data = _read_bytes(path)
        head = data[:64].lstrip()
        if head.startswith(b"TABLE_DUMP") or head.startswith(b"#"):
            yield from parse_text_dump(io.StringIO(data.decode("utf-8")), collector, strict=False, stats=stats)
        else:
            yield from parse_mrt(io.BytesIO(data), collector, strict=False, stats=stats)


def stage_build(cfg: PipelineConfig) -> list[Path]:
    spec = cfg.capture_spec()
    inputs = cfg.inputs
    stats = ParseStats()

    snapshot = normalize(_iter_rib(cfg, stats), spec.target, cfg.rib_window)
    table = build_prefix_origin_table(snapshot)
    invalid_dropped = 0
    if cfg.use_roas and inputs.roas is not None:
        roas = parse_roas(_text(inputs.roas), strict=False, stats=stats)
        validated = validate_origins(table, roas)
        cleaned = drop_invalid(snapshot, validated)
        invalid_dropped = len(snapshot.records) - len(cleaned.records)
        snapshot = cleaned
        table = build_prefix_origin_table(snapshot)

    istats = InferenceStats()
    adjacencies = infer_bgp_adjacencies(snapshot, istats)
    hstats = HopMapStats()
    trace_only = traceroutes = 0
    trace_files = list(inputs.traceroutes) or [p for _, p in _fetched(cfg, {"atlas"})]
    if cfg.use_traceroutes and trace_files:
        results = []
        for path in trace_files:
            results.extend(parse_atlas_traceroute(_text(path), strict=False, stats=stats))
        traceroutes = len(results)
        adjacencies, trace_only = merge_adjacency_sets(adjacencies, infer_traceroute_adjacencies(results, table, hstats))

    delegated_files = list(inputs.delegated) or [p for _, p in _fetched(cfg, {"delegated"})]
    if not delegated_files:
        log.warning("no delegated registry files: every AS will be treated as unregistered")
    entries = []
    for path in delegated_files:
        entries.extend(parse_delegated_extended(_text(path), strict=False, stats=stats))
    registry = registry_index(entries)
    as2org = parse_as2org(_text(inputs.as2org), stats=stats) if inputs.as2org else {}
    state_owned = parse_state_owned(_text(inputs.state_owned), strict=False, stats=stats) if inputs.state_owned else {}

    pops: dict = {}
    prefix_countries: dict = {}
    geo_stats = PrefixGeoStats()
    unlocated_peers = 0
    if inputs.geolite_blocks and inputs.geolite_locations:
        geo = parse_geolite_blocks([_text(p) for p in inputs.geolite_blocks], _text(inputs.geolite_locations),
                                   stats=stats)
        peers, _ = extract_peer_ips(snapshot)
        pops, unlocated_peers = geolocate_pops(peers, geo)
        prefix_countries = geolocate_prefixes(table, geo, stats=geo_stats)
    _check_budget(cfg, stats)

    counter = ConflictCounter()
    records = enrich(adjacencies.nodes(), registry, as2org, state_owned=state_owned, pops=pops,
                     prefix_countries=prefix_countries, counter=counter)
    registered = Counter(e.country for e in registry.values() if e.status in ACTIVE_STATUSES)
    provenance = {
        "rib_records": len(snapshot.records),
        "per_collector": snapshot.per_collector,
        "out_of_window": snapshot.dropped_out_of_window,
        "duplicates": snapshot.duplicates,
        "rpki_invalid_dropped": invalid_dropped,
        "rejected_paths": dict(sorted(istats.rejected.items())),
        "traceroutes": traceroutes,
        "traceroute_only_edges": trace_only,
        "unresolved_hops": hstats.unresolved,
        "ambiguous_hops": hstats.ambiguous,
        "registered": dict(sorted(registered.items())),
        "registration_conflicts": counter.org_conflicts,
        "unlocated_peer_addresses": unlocated_peers,
        "prefixes_located": geo_stats.located,
        "prefixes_unlocated": geo_stats.unlocated,
        "parse_errors": stats.errored,
        "parse_warnings": len(stats.warnings),
        "inputs": sorted(p.name for p in inputs.files()),
    }
    topo = build_topology(adjacencies, records, spec.target, provenance)

    out = cfg.out_dir
    snap_path = graphio.export_graph(topo, out / SNAPSHOT_FILE, "jsonl")
    with (out / "adjacencies.csv").open("w", encoding="utf-8", newline="") as fh:
        write_adjacency_csv(topo.edges, fh)
    with (out / "enrichment.csv").open("w", encoding="utf-8", newline="") as fh:
        write_enrichment_csv(topo.nodes, fh)
    log.info("built topology: %d ASes, %d edges", len(topo.nodes), len(topo.edges))
    return [snap_path, out / "adjacencies.csv", out / "enrichment.csv"]


def _indicators(cfg: PipelineConfig, year: int) -> dict[str, dict[str, float | None]]:
    if cfg.inputs.vdem is None:
        return {}
    extra = None
    if cfg.inputs.vdem_names is not None:
        extra = {row["country_name"]: row["alpha2"] for row in csv.DictReader(_text(cfg.inputs.vdem_names))}
    rows = parse_vdem(_text(cfg.inputs.vdem), year, extra_names=extra)
    return {
        "v2mecenefi": {r.country: r.v2mecenefi for r in rows},
        "v2x_polyarchy": {r.country: r.v2x_polyarchy for r in rows},
    }


CORRELATED_METRICS = ("hop1_burden", "foreign_neighbours", "first_degree_domestic", "unique_registrants",
                      "degree_mean", "eigencentrality_sum", "observability")


def analyze_topology(cfg: PipelineConfig, topo: TopologySnapshot) -> dict[str, Any]:
    graph = topo.graph()
    n = len(graph)
    toggles = cfg.metrics
    a = cfg.analysis
    summary: dict[str, Any] = {"nodes": n, "edges": graph.edge_count,
                               "bogons": sum(1 for r in topo.nodes.values() if r.bogon)}

    eig = np.full(n, np.nan)
    if toggles.eigencentrality and n:
        result = eigencentrality(graph, tolerance=a.eigen_tolerance)
        eig = result.scores
        summary["eigenvalue"] = result.eigenvalue
        summary["eigen_residual"] = result.residual
    ecc = eccentricity(graph).astype(float) if toggles.eccentricity else np.full(n, np.nan)
    clus = local_clustering(graph) if toggles.clustering else np.full(n, np.nan)
    if toggles.clustering:
        summary["clustering_coefficient"] = clustering_coefficient(graph)
    if toggles.path_length:
        est = average_path_length(graph, a.path_sample_size, cfg.layout.seed, a.path_exact_threshold)
        summary["average_path_length"] = asdict(est)
    if toggles.eccentricity and n:
        summary["diameter"] = int(ecc.max())

    registered = topo.provenance.get("registered", {})
    observed = Counter(r.registration_country for r in topo.nodes.values() if not r.bogon)
    countries = list(a.countries) or graph.countries()
    aggregates = {c.country: c for c in country_aggregates(graph, eig, ecc, registered)}

    per_country: dict[str, dict[str, Any]] = {}
    for c in countries:
        agg = aggregates.get(c)
        foreign = foreign_connectivity(graph, c)
        profile = funnel_profile(graph, c)
        reg = registered.get(c, 0)
        per_country[c] = {
            "aggregate": asdict(agg) if agg else None,
            "foreign": asdict(foreign),
            "funnel": asdict(profile),
            "hop1_burden": profile.burden[0] if profile.burden else 0.0,
            "degree_curve": degree_threshold_curve(graph, c, a.degree_curve_max),
            "observability": {"registered": reg, "observed": observed.get(c, 0),
                              "fraction": observed.get(c, 0) / reg if reg else None},
        }

    total_reg = sum(registered.values())
    observability = {
        "registered": total_reg,
        "observed": sum(observed.values()),
        "overall": sum(observed.values()) / total_reg if total_reg else None,
        "bogons": summary["bogons"],
    }

    year = a.indicator_year or int(time.strftime("%Y", time.gmtime(topo.captured_at)))
    indicators = _indicators(cfg, year)
    eligible = [c for c in countries if observed.get(c, 0) >= a.min_observed]
    correlations = []
    for metric in CORRELATED_METRICS:
        values = {}
        for c in eligible:
            pc = per_country[c]
            agg = pc["aggregate"] or {}
            values[c] = {
                "hop1_burden": pc["hop1_burden"],
                "foreign_neighbours": pc["foreign"]["foreign_neighbours"],
                "first_degree_domestic": pc["foreign"]["first_degree_domestic"],
                "unique_registrants": pc["foreign"]["unique_registrants"],
                "degree_mean": agg.get("degree_mean"),
                "eigencentrality_sum": agg.get("eigencentrality_sum"),
                "observability": pc["observability"]["fraction"],
            }[metric]
        for name, series in sorted(indicators.items()):
            paired = [c for c in eligible if series.get(c) is not None and values.get(c) is not None]
            try:
                r = pearson_correlation(values, series)
                note = ""
            except ValueError as exc:
                r, note = None, str(exc)
            correlations.append({"metric": metric, "indicator": name, "r": r, "n": len(paired), "note": note})

    nodes = [
        {"asn": asn, "country": graph.country[asn], "degree": int(graph.degree[i]), "eigencentrality": eig[i],
         "eccentricity": ecc[i], "clustering": clus[i]}
        for i, asn in enumerate(graph.nodes)
    ]
    return {
        "schema": REPORT_SCHEMA,
        "captured_at": topo.captured_at,
        "indicator_year": year,
        "graph": summary,
        "countries": per_country,
        "observability": observability,
        "correlations": correlations,
        "provenance": topo.provenance,
        "nodes": nodes,
    }


def stage_analyze(cfg: PipelineConfig) -> list[Path]:
    topo = load_snapshot(cfg)
    report = analyze_topology(cfg, topo)
    out = cfg.out_dir
    nodes = report.pop("nodes")
    paths = [_write_json(out / REPORT_FILE, report)]
    paths.append(_write_csv(out / "node_metrics.csv", ["asn", "country", "degree", "eigencentrality",
                                                        "eccentricity", "clustering"],
                            [[r["asn"], r["country"], r["degree"], _fmt(r["eigencentrality"]),
                              _fmt(r["eccentricity"]), _fmt(r["clustering"])] for r in nodes]))
    countries = report["countries"]
    agg_fields = ["degree_sum", "degree_mean", "degree_stddev", "degree_proportion", "eigencentrality_sum",
                  "mean_eccentricity", "observed", "registered"]
    paths.append(_write_csv(out / "country_aggregates.csv", ["country"] + agg_fields,
                            [[c] + [_fmt((v["aggregate"] or {}).get(f)) for f in agg_fields]
                             for c, v in countries.items()]))
    paths.append(_write_csv(out / "foreign_connectivity.csv",
                            ["country", "foreign_neighbours", "first_degree_domestic", "unique_registrants"],
                            [[c, v["foreign"]["foreign_neighbours"], v["foreign"]["first_degree_domestic"],
                              v["foreign"]["unique_registrants"]] for c, v in countries.items()]))
    paths.append(_write_csv(out / "funnel.csv",
                            ["country", "layers", "relative_changes", "burden", "unreachable_domestic"],
                            [[c, _join(v["funnel"]["layers"]), _join(v["funnel"]["relative_changes"]),
                              _join(v["funnel"]["burden"]), v["funnel"]["unreachable_domestic"]]
                             for c, v in countries.items()]))
    paths.append(_write_csv(out / "observability.csv", ["country", "registered", "observed", "fraction"],
                            [[c, v["observability"]["registered"], v["observability"]["observed"],
                              _fmt(v["observability"]["fraction"])] for c, v in countries.items()]))
    paths.append(_write_csv(out / "correlations.csv", ["metric", "indicator", "r", "n", "note"],
                            [[r["metric"], r["indicator"], _fmt(r["r"]), r["n"], r["note"]]
                             for r in report["correlations"]]))
    return paths


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value)) if math.isfinite(value) else ""
    return str(value)


def _join(values) -> str:
    return " ".join(_fmt(v) for v in values)


def stage_layout(cfg: PipelineConfig) -> list[Path]:
    topo = load_snapshot(cfg)
    graph: Graph = topo.graph()
    if len(graph) == 0:
        raise DataError("snapshot has no nodes to lay out")
    embedding = force_atlas2(graph, cfg.layout)
    scores = eigencentrality(graph).scores if cfg.metrics.eigencentrality else graph.degree.astype(float)
    out = cfg.out_dir
    with (out / EMBEDDING_FILE).open("w", encoding="utf-8", newline="") as fh:
        write_embedding_csv(embedding, fh)
    (out / SVG_FILE).write_text(render_svg(graph, embedding, Styling(), scores), encoding="utf-8")
    meta = _write_json(out / "layout.json", {"iterations": embedding.iterations,
                                              "mean_displacement": embedding.mean_displacement,
                                              "params": asdict(cfg.layout)})
    return [out / EMBEDDING_FILE, out / SVG_FILE, meta]


def stage_report(cfg: PipelineConfig) -> list[Path]:
    out = cfg.out_dir
    for required in (SNAPSHOT_FILE, REPORT_FILE):
        if not (out / required).exists():
            raise MissingArtifact(f"{required} not found in {out} (run `build` and `analyze` first)")
    outputs = [
        {"file": p.name, "sha256": sha256_file(p), "bytes": p.stat().st_size}
        for p in sorted(out.iterdir())
        if p.is_file() and p.name != MANIFEST_FILE
    ]
    inputs = [
        {"file": str(p), "sha256": sha256_file(p), "bytes": p.stat().st_size}
        for p in cfg.inputs.files() if p.is_file()
    ]
    fetched = out / FETCH_FILE
    if fetched.exists():
        for item in json.loads(fetched.read_text())["items"]:
            p = Path(item["path"])
            if item.get("ok") and p.is_file():
                inputs.append({"file": str(p), "sha256": sha256_file(p), "bytes": p.stat().st_size})
    timings = json.loads((out / TIMINGS_FILE).read_text()) if (out / TIMINGS_FILE).exists() else {}
    manifest = {
        "schema": "topofunnel.manifest/1",
        "versions": {"topofunnel": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "target_time": cfg.target_time,
        "seed": cfg.layout.seed,
        "inputs": inputs,
        "outputs": outputs,
        "timings": timings,
    }
    return [_write_json(out / MANIFEST_FILE, manifest)]


STAGES = {"fetch": stage_fetch, "build": stage_build, "analyze": stage_analyze, "layout": stage_layout,
          "report": stage_report}


def run_stage(cfg: PipelineConfig, command: str) -> list[Path]:
    """Run one stage and return the artifacts it wrote. Raises on failure."""
    if command not in STAGES:
        raise ConfigError(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}")
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    artifacts = STAGES[command](cfg)
    if command != "report":
        _record_timing(cfg.out_dir, command, time.perf_counter() - start)
    return artifacts


def exit_status(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_USAGE
    if isinstance(exc, DATA_ERRORS):
        return EXIT_DATA
    return EXIT_INTERNAL


def run_pipeline(cfg: PipelineConfig, command: str) -> int:
    """Run a stage, log the outcome and return the process exit status."""
    try:
        artifacts = run_stage(cfg, command)
    except Exception as exc:  # noqa: BLE001 - mapped to an exit status
        code = exit_status(exc)
        if code == EXIT_INTERNAL:
            log.exception("internal error in %s", command)
        else:
            log.error("%s: %s", command, exc)
        return code
    for path in artifacts:
        log.info("wrote %s", path)
    return EXIT_OK
