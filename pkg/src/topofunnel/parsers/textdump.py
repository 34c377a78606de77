"""One-line-per-route text dumps (``bgpdump -m`` layout), as published for PCH.

Each line reads ``TABLE_DUMP2|<ts>|B|<peer_ip>|<peer_as>|<prefix>|<as_path>|...``.
Only the fields the pipeline consumes are required; anything after the path
is ignored. AS_SET members appear in braces: ``65001 65002 {65003,65004}``.
"""

from __future__ import annotations

import ipaddress
import re
from typing import Iterable, Iterator, TextIO

from ..records import ParseStats, PathSegment, RawRibRecord, SegmentKind
from .errors import RecordError

_SET = re.compile(r"\{([0-9,\s]*)\}")


def parse_path_text(text: str) -> tuple[PathSegment, ...]:
    segments: list[PathSegment] = []
    run: list[int] = []
    pos = 0
    text = text.strip()
    for match in _SET.finditer(text):
        run.extend(_asns(text[pos:match.start()].split()))
        if run:
            segments.append(PathSegment(SegmentKind.SEQUENCE, tuple(run)))
            run = []
        members = [m for m in match.group(1).replace(",", " ").split()]
        segments.append(PathSegment(SegmentKind.SET, tuple(_asns(members))))
        pos = match.end()
    run.extend(_asns(text[pos:].split()))
    if run:
        segments.append(PathSegment(SegmentKind.SEQUENCE, tuple(run)))
    return tuple(segments)


def _asns(tokens: Iterable[str]) -> list[int]:
    out = []
    for tok in tokens:
        if "." in tok:  # asdot notation
            hi, lo = tok.split(".", 1)
            value = (int(hi) << 16) | int(lo)
        else:
            value = int(tok)
        if not 0 <= value < 2**32:
            raise ValueError(f"ASN out of range: {tok}")
        out.append(value)
    return out


def parse_text_dump(
    stream: TextIO,
    collector: str = "",
    *,
    strict: bool = True,
    stats: ParseStats | None = None,
) -> Iterator[RawRibRecord]:
    stats = stats if stats is not None else ParseStats()
    for lineno, line in enumerate(stream, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("|")
        if not fields[0].startswith("TABLE_DUMP"):
            stats.skipped += 1
            continue
        try:
            if len(fields) < 7:
                raise ValueError("too few fields")
            timestamp = int(fields[1])
            peer_ip = ipaddress.ip_address(fields[3])
            peer_as = _asns([fields[4]])[0]
            prefix = ipaddress.ip_network(fields[5], strict=False)
            path = parse_path_text(fields[6])
        except ValueError as exc:
            if strict:
                raise RecordError(f"bad dump line: {exc}", line=lineno) from None
            stats.error(f"line {lineno}: {exc}")
            continue
        stats.records += 1
        yield RawRibRecord(collector, peer_ip, peer_as, prefix, path, timestamp, timestamp)
