"""Undirected AS adjacencies from AS paths and traceroute hops."""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable

from .codes import AS_TRANS
from .records import PathSegment, SegmentKind, TracerouteResult
from .rib import PrefixOriginTable, RibSnapshot

BGP = "bgp"
TRACEROUTE = "traceroute"


class PathRejected(ValueError):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


def sanitize_path(segments: Iterable[PathSegment]) -> list[tuple[int, ...]]:
    """Split an AS path into clean fragments of directly adjacent ASNs.

    Prepending is collapsed. AS_TRANS and AS_SET segments end the current
    fragment so no adjacency is bridged across them. An ASN that reappears
    after a different ASN is a loop and rejects the path. Raises PathRejected
    with reason ``loop`` or ``empty``.
    """
    fragments: list[list[int]] = []
    current: list[int] = []
    for seg in segments:
        if seg.kind is SegmentKind.SET:
            if current:
                fragments.append(current)
            current = []
            continue
        for asn in seg.asns:
            if asn == AS_TRANS:
                if current:
                    fragments.append(current)
                current = []
            elif not current or current[-1] != asn:
                current.append(asn)
    if current:
        fragments.append(current)
    seen: set[int] = set()
    for frag in fragments:
        for asn in frag:
            if asn in seen:
                raise PathRejected("loop")
            seen.add(asn)
    if not fragments:
        raise PathRejected("empty")
    return [tuple(f) for f in fragments]


def first_hop(segments: Iterable[PathSegment]) -> int | None:
    """First ASN of the path if it is a plain sequence member."""
    for seg in segments:
        if not seg.asns:
            continue
        if seg.kind is SegmentKind.SET or seg.asns[0] == AS_TRANS:
            return None
        return seg.asns[0]
    return None


def edge(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class EdgeInfo:
    provenance: frozenset[str]
    observations: int = 1
    observers: frozenset[str] = frozenset()


@dataclass
class AdjacencySet:
    """Canonical (low, high) ASN pairs with provenance and observation counts."""

    edges: dict[tuple[int, int], EdgeInfo] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.edges)

    def __contains__(self, pair: object) -> bool:
        a, b = pair  # type: ignore[misc]
        return edge(a, b) in self.edges

    def __iter__(self):
        return iter(self.edges)

    def get(self, a: int, b: int) -> EdgeInfo | None:
        return self.edges.get(edge(a, b))

    def add(self, a: int, b: int, source: str, observer: str | None = None, count: int = 1) -> None:
        if a == b:
            return
        key = edge(a, b)
        prev = self.edges.get(key)
        observers = frozenset({observer}) if observer is not None else frozenset()
        if prev is None:
            self.edges[key] = EdgeInfo(frozenset({source}), count, observers)
        else:
            self.edges[key] = EdgeInfo(prev.provenance | {source}, prev.observations + count,
                                       prev.observers | observers)

    def nodes(self) -> set[int]:
        return {asn for pair in self.edges for asn in pair}

    def sorted(self) -> AdjacencySet:
        return AdjacencySet(dict(sorted(self.edges.items())))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, AdjacencySet) and self.edges == other.edges


@dataclass
class InferenceStats:
    records: int = 0
    rejected: Counter = field(default_factory=Counter)


def infer_bgp_adjacencies(snapshot: RibSnapshot, stats: InferenceStats | None = None) -> AdjacencySet:
    """Adjacencies between consecutive ASNs of every clean path fragment,
    plus the collector peer's session to the first path ASN."""
    stats = stats if stats is not None else InferenceStats()
    adj = AdjacencySet()
    for rec in snapshot.records:
        stats.records += 1
        try:
            fragments = sanitize_path(rec.path_segments)
        except PathRejected as exc:
            stats.rejected[exc.reason] += 1
            continue
        pairs = set()
        for frag in fragments:
            pairs.update(edge(a, b) for a, b in zip(frag, frag[1:]))
        head = first_hop(rec.path_segments)
        if head is not None and rec.peer_as not in (0, AS_TRANS) and rec.peer_as != head:
            pairs.add(edge(rec.peer_as, head))
        for a, b in pairs:
            adj.add(a, b, BGP, rec.collector)
    return adj.sorted()


def lpm_lookup(table: PrefixOriginTable, address) -> tuple | None:
    """(prefix, origin ASNs) of the longest prefix containing ``address``, or None."""
    hit = table.lookup(address)
    if hit is None:
        return None
    prefix, origins = hit
    return prefix, frozenset(origins)


@dataclass
class HopMapStats:
    unresolved: int = 0
    ambiguous: int = 0


def map_hops_to_asns(
    result: TracerouteResult, table: PrefixOriginTable, stats: HopMapStats | None = None
) -> list[int | None]:
    """Hop-by-hop origin ASNs, with None for hops that cannot be pinned to one AS.

    Hops that are silent, unroutable, MOAS, or whose responders disagree become
    gaps. Repeated ASNs and repeated gaps collapse.
    """
    stats = stats if stats is not None else HopMapStats()
    out: list[int | None] = []
    for hop in result.hops:
        asns: set[int] = set()
        ambiguous = False
        for address in hop.addresses:
            try:
                hit = lpm_lookup(table, address)
            except ValueError:
                hit = None
            if hit is None:
                continue
            origins = hit[1]
            if len(origins) != 1:
                ambiguous = True
                continue
            asns |= origins
        if ambiguous or len(asns) > 1:
            stats.ambiguous += 1
            value = None
        elif not asns:
            stats.unresolved += 1
            value = None
        else:
            value = next(iter(asns))
        if out and out[-1] == value:
            continue
        out.append(value)
    return out


def infer_traceroute_adjacencies(
    results: Iterable[TracerouteResult], table: PrefixOriginTable, stats: HopMapStats | None = None
) -> AdjacencySet:
    adj = AdjacencySet()
    for result in results:
        hops = map_hops_to_asns(result, table, stats)
        pairs = {edge(a, b) for a, b in zip(hops, hops[1:]) if a is not None and b is not None and a != b}
        for a, b in pairs:
            adj.add(a, b, TRACEROUTE, f"probe:{result.probe_id}")
    return adj.sorted()


def merge_adjacency_sets(primary: AdjacencySet, supplement: AdjacencySet) -> tuple[AdjacencySet, int]:
    """Union of two adjacency sets and the number of edges only the supplement saw."""
    merged = dict(primary.edges)
    only_supplement = 0
    for key, info in supplement.edges.items():
        prev = merged.get(key)
        if prev is None:
            only_supplement += 1
            merged[key] = info
        else:
            merged[key] = EdgeInfo(prev.provenance | info.provenance,
                                   prev.observations + info.observations,
                                   prev.observers | info.observers)
    return AdjacencySet(dict(sorted(merged.items()))), only_supplement


def write_adjacency_csv(adj: AdjacencySet, fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["asn_a", "asn_b", "provenance", "observations"])
    for (a, b), info in sorted(adj.edges.items()):
        writer.writerow([a, b, "|".join(sorted(info.provenance)), info.observations])


def read_adjacency_csv(fh: IO[str]) -> AdjacencySet:
    adj = AdjacencySet()
    for row in csv.DictReader(fh):
        key = edge(int(row["asn_a"]), int(row["asn_b"]))
        adj.edges[key] = EdgeInfo(frozenset(row["provenance"].split("|")), int(row["observations"]))
    return adj.sorted()
