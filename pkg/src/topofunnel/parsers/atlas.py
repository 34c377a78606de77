"""RIPE Atlas traceroute results (public JSON result format).

Accepts either a JSON array of result objects or one object per line, which
is how the daily dumps are published.
"""

from __future__ import annotations

import json
from typing import Any, Iterator, TextIO

from ..records import Hop, ParseStats, TracerouteResult
from .errors import RecordError


def _hop(raw: dict[str, Any]) -> Hop:
    addresses: list[str] = []
    rtts: list[float] = []
    for reply in raw.get("result") or ():
        if "from" not in reply:
            continue  # {"x": "*"} timeouts and error replies
        if reply["from"] not in addresses:
            addresses.append(reply["from"])
        if isinstance(reply.get("rtt"), (int, float)):
            rtts.append(float(reply["rtt"]))
    return Hop(int(raw["hop"]), tuple(addresses), tuple(rtts))


def _result(obj: dict[str, Any]) -> TracerouteResult:
    hops = tuple(_hop(h) for h in obj["result"])
    for prev, cur in zip(hops, hops[1:]):
        if cur.index <= prev.index:
            raise RecordError(f"hop indices not increasing ({prev.index} then {cur.index})")
    return TracerouteResult(
        probe_id=int(obj.get("prb_id", 0)),
        timestamp=int(obj.get("timestamp", 0)),
        destination=str(obj.get("dst_addr", "")),
        hops=hops,
    )


def _objects(stream: TextIO, stats: ParseStats, strict: bool) -> Iterator[tuple[int, Any]]:
    first = ""
    while not first:
        line = stream.readline()
        if not line:
            return
        first = line.strip()
    if first.startswith("["):
        text = first + stream.read()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise RecordError(f"malformed JSON array: {exc.msg}", line=exc.lineno) from None
        for i, obj in enumerate(data, 1):
            yield i, obj
        return
    lineno = 1
    line = first
    while True:
        if line:
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                if strict:
                    raise RecordError(f"malformed JSON: {exc.msg}", line=lineno) from None
                stats.error(f"line {lineno}: malformed JSON")
        line = stream.readline()
        if not line:
            return
        lineno += 1
        line = line.strip()


def parse_atlas_traceroute(
    stream: TextIO, *, strict: bool = True, stats: ParseStats | None = None
) -> Iterator[TracerouteResult]:
    """Yield traceroute results; other measurement types are skipped and counted."""
    stats = stats if stats is not None else ParseStats()
    for where, obj in _objects(stream, stats, strict):
        if not isinstance(obj, dict) or obj.get("type") != "traceroute":
            stats.skipped += 1
            continue
        if not isinstance(obj.get("result"), list):
            stats.skipped += 1
            continue
        try:
            result = _result(obj)
        except (RecordError, KeyError, TypeError, ValueError) as exc:
            if strict:
                raise RecordError(f"bad traceroute result: {exc}", line=where) from None
            stats.error(f"item {where}: {exc}")
            continue
        stats.records += 1
        yield result
