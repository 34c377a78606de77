"""Coherent RIB snapshot built from parsed records of many collectors."""

from __future__ import annotations

import enum
import ipaddress
import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import IO, Iterable

from .prefixtrie import IPNetwork, PrefixTrie, as_address
from .records import PathSegment, RawRibRecord, RoaRecord, SegmentKind

SNAPSHOT_SCHEMA = "topofunnel.rib/1"


class EmptySnapshotError(ValueError):
    pass


@dataclass(frozen=True)
class RibSnapshot:
    captured_at: int
    window: int
    records: tuple[RawRibRecord, ...]
    per_collector: dict[str, int]
    dropped_out_of_window: int = 0
    duplicates: int = 0


def _record_key(rec: RawRibRecord):
    return (rec.collector, rec.prefix.version, int(rec.prefix.network_address), rec.prefix.prefixlen,
            rec.peer_ip.version, int(rec.peer_ip), rec.peer_as,
            tuple((s.kind, s.asns) for s in rec.path_segments), rec.originated, rec.recorded)


def normalize(records: Iterable[RawRibRecord], captured_at: int, window: int) -> RibSnapshot:
    """Deduplicate and time-filter records into one snapshot.

    Records whose dump time is more than ``window`` seconds away from
    ``captured_at`` are dropped and counted. Two records are duplicates when
    collector, peer address, prefix and path agree.
    """
    kept: dict[tuple, RawRibRecord] = {}
    stale = dupes = 0
    for rec in records:
        if abs(rec.recorded - captured_at) > window:
            stale += 1
            continue
        ident = (rec.collector, rec.peer_ip, rec.prefix, rec.path_segments)
        if ident in kept:
            dupes += 1
            # keep the smallest full key so the survivor never depends on input order
            if _record_key(rec) < _record_key(kept[ident]):
                kept[ident] = rec
            continue
        kept[ident] = rec
    if not kept:
        raise EmptySnapshotError(f"no records within {window}s of {captured_at} ({stale} out of window)")
    ordered = tuple(sorted(kept.values(), key=_record_key))
    per_collector = dict(sorted(Counter(r.collector for r in ordered).items()))
    return RibSnapshot(captured_at, window, ordered, per_collector, stale, dupes)


class Validity(str, enum.Enum):
    VALID = "valid"
    INVALID = "invalid"
    NOT_FOUND = "not-found"


@dataclass(frozen=True)
class OriginInfo:
    state: Validity = Validity.NOT_FOUND
    ambiguous: bool = False


@dataclass
class PrefixOriginTable:
    """prefix -> {origin ASN: OriginInfo}, with a longest-prefix-match index."""

    entries: dict[IPNetwork, dict[int, OriginInfo]]
    no_origin: int = 0
    index: PrefixTrie[dict[int, OriginInfo]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.index = PrefixTrie()
        for prefix, origins in self.entries.items():
            self.index.insert(prefix, origins)

    def lookup(self, address) -> tuple[IPNetwork, dict[int, OriginInfo]] | None:
        return self.index.lookup(as_address(address))

    def origins(self) -> set[int]:
        return {asn for origins in self.entries.values() for asn in origins}


def origins_of(segments: tuple[PathSegment, ...]) -> tuple[tuple[int, ...], bool]:
    """Origin ASNs of a path and whether they are ambiguous (path ends in an AS_SET)."""
    for seg in reversed(segments):
        if not seg.asns:
            continue
        if seg.kind is SegmentKind.SET:
            return tuple(sorted(set(seg.asns))), True
        return (seg.asns[-1],), False
    return (), False


def build_prefix_origin_table(snapshot: RibSnapshot) -> PrefixOriginTable:
    entries: dict[IPNetwork, dict[int, OriginInfo]] = {}
    no_origin = 0
    for rec in snapshot.records:
        origins, ambiguous = origins_of(rec.path_segments)
        if not origins:
            no_origin += 1
            continue
        slot = entries.setdefault(rec.prefix, {})
        for asn in origins:
            prev = slot.get(asn)
            # an origin stays ambiguous only if no record names it unambiguously
            slot[asn] = OriginInfo(ambiguous=ambiguous and (prev is None or prev.ambiguous))
    ordered = dict(sorted(entries.items(), key=lambda kv: _prefix_key(kv[0])))
    return PrefixOriginTable({p: dict(sorted(o.items())) for p, o in ordered.items()}, no_origin)


def _prefix_key(prefix: IPNetwork) -> tuple[int, int, int]:
    return prefix.version, int(prefix.network_address), prefix.prefixlen


def roa_index(roas: Iterable[RoaRecord]) -> PrefixTrie[list[RoaRecord]]:
    index: PrefixTrie[list[RoaRecord]] = PrefixTrie()
    for roa in roas:
        bucket = index.get(roa.prefix)
        if bucket is None:
            index.insert(roa.prefix, [roa])
        else:
            bucket.append(roa)
    return index


def validate_origin(prefix: IPNetwork, origin: int, index: PrefixTrie[list[RoaRecord]]) -> Validity:
    """RFC 6811 route origin validation of one (prefix, origin) pair."""
    covering = [roa for _, bucket in index.covering(prefix) for roa in bucket]
    if not covering:
        return Validity.NOT_FOUND
    for roa in covering:
        # AS0 ROAs never match (RFC 7607)
        if roa.asn == origin and roa.asn != 0 and prefix.prefixlen <= roa.max_length:
            return Validity.VALID
    return Validity.INVALID


def validate_origins(table: PrefixOriginTable, roas: Iterable[RoaRecord]) -> PrefixOriginTable:
    index = roa_index(roas)
    entries = {
        prefix: {
            asn: OriginInfo(validate_origin(prefix, asn, index), info.ambiguous)
            for asn, info in origins.items()
        }
        for prefix, origins in table.entries.items()
    }
    return PrefixOriginTable(entries, table.no_origin)


def drop_invalid(snapshot: RibSnapshot, table: PrefixOriginTable) -> RibSnapshot:
    """Remove records whose every origin failed validation."""
    def keep(rec: RawRibRecord) -> bool:
        origins, _ = origins_of(rec.path_segments)
        info = table.entries.get(rec.prefix, {})
        return not origins or any(info.get(o, OriginInfo()).state is not Validity.INVALID for o in origins)

    records = tuple(r for r in snapshot.records if keep(r))
    per_collector = dict(sorted(Counter(r.collector for r in records).items()))
    return RibSnapshot(snapshot.captured_at, snapshot.window, records, per_collector,
                       snapshot.dropped_out_of_window, snapshot.duplicates)


@dataclass(frozen=True)
class PeerObservation:
    asn: int
    addresses: tuple[str, ...]
    collectors: dict[str, tuple[str, ...]]


def extract_peer_ips(snapshot: RibSnapshot) -> tuple[list[PeerObservation], int]:
    """Group collector peer addresses by the peer AS that announced through them.

    Returns the observations (ordered by ASN) and the number of records whose
    peer address was unusable.
    """
    seen: dict[int, dict[str, set[str]]] = defaultdict(lambda: defaultdict(set))
    invalid = 0
    for rec in snapshot.records:
        try:
            addr = as_address(rec.peer_ip)
        except ValueError:
            invalid += 1
            continue
        if addr.is_unspecified:
            invalid += 1
            continue
        seen[rec.peer_as][str(addr)].add(rec.collector)
    out = []
    for asn in sorted(seen):
        by_addr = seen[asn]
        addrs = tuple(sorted(by_addr, key=lambda a: (ipaddress.ip_address(a).version, int(ipaddress.ip_address(a)))))
        out.append(PeerObservation(asn, addrs, {a: tuple(sorted(by_addr[a])) for a in addrs}))
    return out, invalid


def _record_to_json(rec: RawRibRecord) -> dict:
    return {
        "collector": rec.collector,
        "peer_ip": str(rec.peer_ip),
        "peer_as": rec.peer_as,
        "prefix": str(rec.prefix),
        "path": [[int(s.kind), list(s.asns)] for s in rec.path_segments],
        "originated": rec.originated,
        "recorded": rec.recorded,
    }


def _record_from_json(obj: dict) -> RawRibRecord:
    return RawRibRecord(
        obj["collector"],
        ipaddress.ip_address(obj["peer_ip"]),
        obj["peer_as"],
        ipaddress.ip_network(obj["prefix"]),
        tuple(PathSegment(SegmentKind(k), tuple(a)) for k, a in obj["path"]),
        obj["originated"],
        obj["recorded"],
    )


def write_snapshot(snapshot: RibSnapshot, fh: IO[str]) -> None:
    header = {
        "schema": SNAPSHOT_SCHEMA,
        "captured_at": snapshot.captured_at,
        "window": snapshot.window,
        "per_collector": snapshot.per_collector,
        "dropped_out_of_window": snapshot.dropped_out_of_window,
        "duplicates": snapshot.duplicates,
    }
    fh.write(json.dumps(header, sort_keys=True) + "\n")
    for rec in snapshot.records:
        fh.write(json.dumps(_record_to_json(rec), sort_keys=True) + "\n")


def read_snapshot(fh: IO[str]) -> RibSnapshot:
    header = json.loads(fh.readline())
    if header.get("schema") != SNAPSHOT_SCHEMA:
        raise ValueError(f"unsupported RIB snapshot schema {header.get('schema')!r}")
    records = tuple(_record_from_json(json.loads(line)) for line in fh if line.strip())
    return RibSnapshot(header["captured_at"], header["window"], records, header["per_collector"],
                       header["dropped_out_of_window"], header["duplicates"])
