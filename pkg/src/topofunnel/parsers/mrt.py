"""MRT routing table dumps (RFC 6396).

Supports TABLE_DUMP_V2 (PEER_INDEX_TABLE followed by RIB_IPV4/IPV6_UNICAST,
including the RFC 8050 ADD-PATH variants) and the legacy TABLE_DUMP type.
Records are decoded one at a time from the stream.
"""

from __future__ import annotations

import ipaddress
import logging
import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterator

from ..records import ParseStats, PathSegment, RawRibRecord, SegmentKind
from .errors import RecordError, TruncatedError

log = logging.getLogger(__name__)

HEADER = struct.Struct(">IHHI")

TABLE_DUMP = 12
TABLE_DUMP_V2 = 13

PEER_INDEX_TABLE = 1
RIB_IPV4_UNICAST = 2
RIB_IPV6_UNICAST = 4
RIB_IPV4_UNICAST_ADDPATH = 8
RIB_IPV6_UNICAST_ADDPATH = 10

_RIB_SUBTYPES = {
    RIB_IPV4_UNICAST: (4, False),
    RIB_IPV6_UNICAST: (6, False),
    RIB_IPV4_UNICAST_ADDPATH: (4, True),
    RIB_IPV6_UNICAST_ADDPATH: (6, True),
}

ATTR_AS_PATH = 2
ATTR_AS4_PATH = 17
FLAG_EXTENDED_LENGTH = 0x10


@dataclass(frozen=True)
class Peer:
    bgp_id: str
    address: ipaddress.IPv4Address | ipaddress.IPv6Address
    asn: int


class _Body:
    """Bounds-checked cursor over one record body."""

    __slots__ = ("buf", "pos")

    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        end = self.pos + n
        if end > len(self.buf):
            raise RecordError(f"record body overrun reading {n} bytes at body offset {self.pos}")
        chunk = self.buf[self.pos:end]
        self.pos = end
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return int.from_bytes(self.take(2), "big")

    def u32(self) -> int:
        return int.from_bytes(self.take(4), "big")


def _address(raw: bytes) -> ipaddress.IPv4Address | ipaddress.IPv6Address:
    return ipaddress.IPv4Address(raw) if len(raw) == 4 else ipaddress.IPv6Address(raw)


def _prefix(body: _Body, version: int) -> ipaddress.IPv4Network | ipaddress.IPv6Network:
    length = body.u8()
    width = 32 if version == 4 else 128
    if length > width:
        raise RecordError(f"prefix length {length} exceeds {width}")
    raw = body.take((length + 7) // 8).ljust(width // 8, b"\0")
    value = int.from_bytes(raw, "big")
    # clear host bits some writers leave set
    value &= ((1 << width) - 1) ^ ((1 << (width - length)) - 1)
    if version == 4:
        return ipaddress.IPv4Network((value, length))
    return ipaddress.IPv6Network((value, length))


def decode_as_path(data: bytes, asn_size: int) -> tuple[PathSegment, ...]:
    segments = []
    body = _Body(data)
    while body.pos < len(data):
        kind = body.u8()
        count = body.u8()
        raw = body.take(count * asn_size)
        asns = tuple(int.from_bytes(raw[i:i + asn_size], "big") for i in range(0, len(raw), asn_size))
        if kind in (1, 2):
            segments.append(PathSegment(SegmentKind(kind), asns))
        elif kind in (3, 4):
            # confederation segments (RFC 5065) never leave the confederation
            continue
        else:
            raise RecordError(f"unknown AS_PATH segment type {kind}")
    return tuple(segments)


def _path_length(segments: tuple[PathSegment, ...]) -> int:
    return sum(len(s.asns) if s.kind is SegmentKind.SEQUENCE else 1 for s in segments)


def merge_as4_path(as_path: tuple[PathSegment, ...], as4_path: tuple[PathSegment, ...]) -> tuple[PathSegment, ...]:
    """Reconstruct the 4-byte path from AS_PATH and AS4_PATH (RFC 6793 section 4.2.3)."""
    surplus = _path_length(as_path) - _path_length(as4_path)
    if surplus < 0:
        return as_path
    head: list[PathSegment] = []
    for seg in as_path:
        if surplus <= 0:
            break
        if seg.kind is SegmentKind.SET:
            head.append(seg)
            surplus -= 1
        else:
            take = seg.asns[:surplus]
            head.append(PathSegment(SegmentKind.SEQUENCE, take))
            surplus -= len(take)
    merged: list[PathSegment] = []
    for seg in head + list(as4_path):
        if merged and seg.kind is SegmentKind.SEQUENCE and merged[-1].kind is SegmentKind.SEQUENCE:
            merged[-1] = PathSegment(SegmentKind.SEQUENCE, merged[-1].asns + seg.asns)
        else:
            merged.append(seg)
    return tuple(merged)


def decode_attributes(data: bytes, asn_size: int) -> tuple[PathSegment, ...]:
    """Return the AS path carried in a BGP path attribute block."""
    body = _Body(data)
    as_path: tuple[PathSegment, ...] = ()
    as4_path: tuple[PathSegment, ...] | None = None
    while body.pos < len(data):
        flags = body.u8()
        code = body.u8()
        length = body.u16() if flags & FLAG_EXTENDED_LENGTH else body.u8()
        value = body.take(length)
        if code == ATTR_AS_PATH:
            as_path = decode_as_path(value, asn_size)
        elif code == ATTR_AS4_PATH:
            as4_path = decode_as_path(value, 4)
    if as4_path is not None and asn_size == 2:
        return merge_as4_path(as_path, as4_path)
    return as_path


def _peer_index_table(body: _Body) -> list[Peer]:
    body.take(4)  # collector BGP id
    body.take(body.u16())  # view name
    peers = []
    for _ in range(body.u16()):
        peer_type = body.u8()
        bgp_id = str(ipaddress.IPv4Address(body.take(4)))
        address = _address(body.take(16 if peer_type & 1 else 4))
        asn = body.u32() if peer_type & 2 else body.u16()
        peers.append(Peer(bgp_id, address, asn))
    return peers


def parse_mrt(
    stream: BinaryIO,
    collector: str = "",
    *,
    strict: bool = True,
    stats: ParseStats | None = None,
) -> Iterator[RawRibRecord]:
    """Yield one RawRibRecord per (prefix, peer) RIB entry in an MRT dump.

    In strict mode record-level problems raise RecordError; otherwise they are
    counted in ``stats`` and the entry is skipped. A stream that ends inside a
    record always raises TruncatedError whose ``offset`` is the end of the
    last complete record. Unsupported MRT types/subtypes are skipped and
    counted.
    """
    stats = stats if stats is not None else ParseStats()
    peers: list[Peer] | None = None
    offset = 0
    while True:
        header = stream.read(HEADER.size)
        if not header:
            return
        if len(header) < HEADER.size:
            raise TruncatedError("truncated MRT header", offset=offset)
        timestamp, mrt_type, subtype, length = HEADER.unpack(header)
        payload = stream.read(length)
        if len(payload) < length:
            raise TruncatedError(
                f"MRT record declares {length} bytes, {len(payload)} present", offset=offset
            )
        record_offset = offset
        offset += HEADER.size + length
        body = _Body(payload)

        if mrt_type == TABLE_DUMP_V2 and subtype == PEER_INDEX_TABLE:
            try:
                peers = _peer_index_table(body)
            except RecordError as exc:
                raise RecordError(f"bad PEER_INDEX_TABLE: {exc}", offset=record_offset) from None
            continue

        if mrt_type == TABLE_DUMP_V2 and subtype in _RIB_SUBTYPES:
            version, addpath = _RIB_SUBTYPES[subtype]
            yield from _rib_entries(body, version, addpath, peers, collector, timestamp,
                                    record_offset, strict, stats)
            continue

        if mrt_type == TABLE_DUMP and subtype in (1, 2):
            try:
                rec = _legacy_entry(body, 4 if subtype == 1 else 6, collector, timestamp)
            except RecordError as exc:
                if strict:
                    raise RecordError(str(exc), offset=record_offset) from None
                stats.error(f"offset {record_offset}: {exc}")
                continue
            stats.records += 1
            yield rec
            continue

        stats.skipped += 1
        log.debug("skipping MRT type %d subtype %d at offset %d", mrt_type, subtype, record_offset)


def _rib_entries(body, version, addpath, peers, collector, timestamp, record_offset, strict, stats):
    try:
        body.u32()  # sequence number
        prefix = _prefix(body, version)
        count = body.u16()
    except RecordError as exc:
        if strict:
            raise RecordError(str(exc), offset=record_offset) from None
        stats.error(f"offset {record_offset}: {exc}")
        return
    for i in range(count):
        try:
            peer_index = body.u16()
            originated = body.u32()
            if addpath:
                body.u32()
            attrs = body.take(body.u16())
        except RecordError as exc:
            # the remaining entries of this record cannot be located
            if strict:
                raise RecordError(str(exc), offset=record_offset) from None
            for _ in range(count - i):
                stats.error(f"offset {record_offset}: {exc}")
            return
        try:
            if peers is None or peer_index >= len(peers):
                raise RecordError(f"RIB entry references absent peer index {peer_index}")
            path = decode_attributes(attrs, 4)
        except RecordError as exc:
            if strict:
                raise RecordError(str(exc), offset=record_offset) from None
            stats.error(f"offset {record_offset}: {exc}")
            continue
        peer = peers[peer_index]
        stats.records += 1
        yield RawRibRecord(collector, peer.address, peer.asn, prefix, path, originated, timestamp)


def _legacy_entry(body: _Body, version: int, collector: str, timestamp: int) -> RawRibRecord:
    width = 4 if version == 4 else 16
    body.u16()  # view
    body.u16()  # sequence
    raw_prefix = body.take(width)
    length = body.u8()
    if length > width * 8:
        raise RecordError(f"prefix length {length} exceeds {width * 8}")
    value = int.from_bytes(raw_prefix, "big")
    value &= ((1 << width * 8) - 1) ^ ((1 << (width * 8 - length)) - 1)
    prefix = (ipaddress.IPv4Network if version == 4 else ipaddress.IPv6Network)((value, length))
    body.u8()  # status
    originated = body.u32()
    peer_ip = _address(body.take(width))
    peer_as = body.u16()
    path = decode_attributes(body.take(body.u16()), 2)
    return RawRibRecord(collector, peer_ip, peer_as, prefix, path, originated, timestamp)
