"""Normalized records produced by the parsers."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from datetime import date

from .prefixtrie import IPAddress, IPNetwork


class SegmentKind(enum.IntEnum):
    SET = 1
    SEQUENCE = 2


@dataclass(frozen=True)
class PathSegment:
    kind: SegmentKind
    asns: tuple[int, ...]


@dataclass(frozen=True)
class RawRibRecord:
    """One RIB entry as seen by one collector peer.

    ``recorded`` is the dump timestamp (MRT header time), ``originated`` the
    time the route was learned. Both are integer UNIX seconds.
    """

    collector: str
    peer_ip: IPAddress
    peer_as: int
    prefix: IPNetwork
    path_segments: tuple[PathSegment, ...]
    originated: int
    recorded: int

    @property
    def internal(self) -> bool:
        return not any(seg.asns for seg in self.path_segments)

    def flat_path(self) -> tuple[int, ...]:
        return tuple(a for seg in self.path_segments for a in seg.asns)


def sequence(*asns: int) -> PathSegment:
    return PathSegment(SegmentKind.SEQUENCE, tuple(asns))


def as_set(*asns: int) -> PathSegment:
    return PathSegment(SegmentKind.SET, tuple(asns))


@dataclass(frozen=True)
class Hop:
    index: int
    addresses: tuple[str, ...]
    rtts: tuple[float, ...] = ()


@dataclass(frozen=True)
class TracerouteResult:
    probe_id: int
    timestamp: int
    destination: str
    hops: tuple[Hop, ...]


@dataclass(frozen=True)
class RegistryEntry:
    asn: int
    registry: str
    country: str
    status: str
    date: date | None = None


@dataclass(frozen=True)
class RoaRecord:
    asn: int
    prefix: IPNetwork
    max_length: int


@dataclass(frozen=True)
class IndicatorRow:
    """V-Dem country-year values; None marks a missing cell."""

    country: str
    year: int
    v2mecenefi: float | None
    v2x_polyarchy: float | None


@dataclass
class ParseStats:
    """Counters shared by the parsers. ``errors`` holds short messages."""

    records: int = 0
    skipped: int = 0
    errored: int = 0
    warnings: list[str] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)

    def error(self, message: str) -> None:
        self.errored += 1
        if len(self.errors) < 1000:
            self.errors.append(message)

    def merge(self, other: ParseStats) -> None:
        self.records += other.records
        self.skipped += other.skipped
        self.errored += other.errored
        self.warnings.extend(other.warnings)
        self.errors.extend(other.errors)
