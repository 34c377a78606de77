"""Registry and ownership datasets: NRO delegated-extended, CAIDA as2org,
ROA exports and the state-owned AS list."""

from __future__ import annotations

import csv
import ipaddress
import logging
from collections import Counter
from datetime import date, datetime
from typing import Iterable, TextIO

from ..codes import UNKNOWN_COUNTRY, is_country_code
from ..records import ParseStats, RegistryEntry, RoaRecord
from .errors import RecordError

log = logging.getLogger(__name__)

REGISTRIES = frozenset({"afrinic", "apnic", "arin", "lacnic", "ripencc", "iana"})
STATUSES = frozenset({"allocated", "assigned", "available", "reserved"})


def _date(text: str) -> date | None:
    text = text.strip()
    if not text or set(text) == {"0"}:
        return None
    return datetime.strptime(text, "%Y%m%d").date()


def parse_delegated_extended(
    stream: TextIO, *, strict: bool = True, stats: ParseStats | None = None
) -> list[RegistryEntry]:
    """ASN rows of an NRO delegated-extended file, expanded one entry per ASN.

    A row ``apnic|CN|asn|4134|3|...`` covers AS4134-4136. Summary lines are
    checked against the number of ``asn`` rows; a mismatch only warns.
    """
    stats = stats if stats is not None else ParseStats()
    entries: list[RegistryEntry] = []
    declared: dict[str, int] = {}
    seen: Counter[str] = Counter()
    header_seen = False
    for lineno, line in enumerate(stream, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("|")
        if not header_seen and fields[0][:1].isdigit():
            header_seen = True  # version line
            continue
        if len(fields) >= 6 and fields[1] == "*" and fields[5] == "summary":
            try:
                declared[fields[2]] = int(fields[4])
            except ValueError:
                stats.warnings.append(f"line {lineno}: unreadable summary count")
            continue
        try:
            if len(fields) < 7:
                raise ValueError(f"expected at least 7 fields, got {len(fields)}")
            registry, cc, kind, start, value, when, status = fields[:7]
            seen[kind] += 1
            if kind != "asn":
                continue
            status = status.strip().lower()
            if status not in STATUSES:
                raise ValueError(f"unknown status {status!r}")
            cc = cc.strip().upper() or UNKNOWN_COUNTRY
            if not is_country_code(cc):
                raise ValueError(f"invalid country code {cc!r}")
            first, count = int(start), int(value)
            if count < 1 or first < 0 or first + count > 2**32:
                raise ValueError(f"bad ASN range {start}+{value}")
            day = _date(when)
        except ValueError as exc:
            if strict:
                raise RecordError(f"bad delegated row: {exc}", line=lineno) from None
            stats.error(f"line {lineno}: {exc}")
            continue
        registry = registry.strip().lower()
        entries.extend(RegistryEntry(asn, registry, cc, status, day) for asn in range(first, first + count))
        stats.records += 1
    for kind, count in declared.items():
        if seen[kind] != count:
            msg = f"summary for {kind} declares {count} rows, found {seen[kind]}"
            log.warning(msg)
            stats.warnings.append(msg)
    return entries


def parse_as2org(
    stream: TextIO, *, stats: ParseStats | None = None
) -> dict[int, tuple[str, str]]:
    """Join the organisation and AS sections of a CAIDA as2org file.

    Returns asn -> (org id, org name). ASes pointing at an unknown org id are
    left unmapped and counted as errors; repeated AS rows keep the last one.
    """
    stats = stats if stats is not None else ParseStats()
    section = None
    columns: list[str] = []
    orgs: dict[str, str] = {}
    as_rows: dict[int, str] = {}
    for lineno, line in enumerate(stream, 1):
        line = line.rstrip("\n")
        if line.startswith("# format:"):
            columns = line[len("# format:"):].strip().split("|")
            section = "org" if columns[0] == "org_id" else "aut" if columns[0] == "aut" else None
            continue
        if not line.strip() or line.startswith("#") or section is None:
            continue
        row = dict(zip(columns, line.split("|")))
        if section == "org":
            orgs[row["org_id"]] = row.get("org_name", "")
            continue
        try:
            asn = int(row["aut"])
        except (KeyError, ValueError):
            stats.error(f"line {lineno}: unreadable ASN")
            continue
        if asn in as_rows:
            msg = f"line {lineno}: duplicate row for AS{asn}, keeping the last"
            log.warning(msg)
            stats.warnings.append(msg)
        as_rows[asn] = row.get("org_id", "")
    mapping = {}
    for asn, org_id in as_rows.items():
        if org_id not in orgs:
            stats.error(f"AS{asn}: dangling org id {org_id!r}")
            continue
        mapping[asn] = (org_id, orgs[org_id])
        stats.records += 1
    return mapping


def _parse_asn(text: str) -> int:
    text = text.strip().upper()
    if text.startswith("AS"):
        text = text[2:]
    asn = int(text)
    if not 0 <= asn < 2**32:
        raise ValueError(f"ASN out of range: {text}")
    return asn


_ROA_ALIASES = {
    "asn": ("asn", "ASN", "origin"),
    "prefix": ("prefix", "IP Prefix", "ip_prefix"),
    "max_length": ("max_length", "Max Length", "maxLength", "max_len"),
}


def _pick(row: dict[str, str], key: str) -> str:
    for name in _ROA_ALIASES[key]:
        if name in row and row[name] is not None:
            return row[name]
    raise ValueError(f"missing column {key}")


def parse_roas(stream: TextIO, *, strict: bool = True, stats: ParseStats | None = None) -> list[RoaRecord]:
    """ROA CSV with columns ``asn,prefix,max_length`` (RIPE export headers also accepted)."""
    stats = stats if stats is not None else ParseStats()
    out = []
    for lineno, row in enumerate(csv.DictReader(_skip_comments(stream)), 2):
        try:
            asn = _parse_asn(_pick(row, "asn"))
            prefix = ipaddress.ip_network(_pick(row, "prefix").strip(), strict=True)
            raw_max = _pick(row, "max_length").strip()
            max_length = int(raw_max) if raw_max else prefix.prefixlen
            if not prefix.prefixlen <= max_length <= prefix.max_prefixlen:
                raise ValueError(f"max_length {max_length} outside [{prefix.prefixlen}, {prefix.max_prefixlen}]")
        except ValueError as exc:
            if strict:
                raise RecordError(f"bad ROA row: {exc}", line=lineno) from None
            stats.error(f"line {lineno}: {exc}")
            continue
        out.append(RoaRecord(asn, prefix, max_length))
        stats.records += 1
    return out


_TRUE = {"1", "true", "yes", "y", "t"}


def parse_state_owned(
    stream: TextIO, *, strict: bool = True, stats: ParseStats | None = None
) -> dict[int, tuple[bool, str]]:
    """State-owned AS list: ``asn,owner[,state_owned]`` -> asn -> (flag, owner name).

    Rows without a flag column are taken as state-owned, which is how the
    published list is laid out.
    """
    stats = stats if stats is not None else ParseStats()
    out: dict[int, tuple[bool, str]] = {}
    for lineno, row in enumerate(csv.DictReader(_skip_comments(stream)), 2):
        try:
            asn = _parse_asn(row.get("asn") or "")
        except ValueError as exc:
            if strict:
                raise RecordError(f"bad state-owned row: {exc}", line=lineno) from None
            stats.error(f"line {lineno}: {exc}")
            continue
        owner = (row.get("owner") or row.get("org_name") or "").strip()
        flag_text = (row.get("state_owned") or "").strip().lower()
        out[asn] = (flag_text in _TRUE if flag_text else True, owner)
        stats.records += 1
    return out


def _skip_comments(lines: Iterable[str]) -> Iterable[str]:
    return (ln for ln in lines if not ln.startswith("#"))
