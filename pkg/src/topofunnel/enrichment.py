"""Per-AS metadata: registration, organisation, ownership and geolocation."""

from __future__ import annotations

import csv
import json
import re
import unicodedata
from collections import defaultdict
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping

from .codes import UNKNOWN_COUNTRY, is_private_asn
from .parsers.geolite import GeoTable
from .records import RegistryEntry
from .rib import PeerObservation, PrefixOriginTable

ACTIVE_STATUSES = frozenset({"allocated", "assigned"})


@dataclass(frozen=True)
class AsRecord:
    asn: int
    registration_country: str = UNKNOWN_COUNTRY
    org_id: str | None = None
    org_name: str | None = None
    state_owned: bool | None = False  # None: listed as state-owned but owner name no longer matches
    pop_countries: frozenset[str] = frozenset()
    prefix_countries: Mapping[str, float] = field(default_factory=dict)
    bogon: bool = False

    def __post_init__(self) -> None:
        if self.bogon and self.registration_country != UNKNOWN_COUNTRY:
            raise ValueError(f"AS{self.asn}: bogon ASes carry country ZZ")

    @property
    def private(self) -> bool:
        return is_private_asn(self.asn)


def registry_index(entries: Iterable[RegistryEntry]) -> dict[int, RegistryEntry]:
    """asn -> entry; a later allocated/assigned row wins over an earlier one."""
    index: dict[int, RegistryEntry] = {}
    for entry in entries:
        prev = index.get(entry.asn)
        if prev is None or entry.status in ACTIVE_STATUSES or prev.status not in ACTIVE_STATUSES:
            index[entry.asn] = entry
    return index


@dataclass
class Registration:
    country: str
    org_id: str | None
    org_name: str | None


@dataclass
class ConflictCounter:
    org_conflicts: int = 0


def resolve_registration(
    asn: int,
    registry: Mapping[int, RegistryEntry],
    as2org: Mapping[int, tuple[str, str]],
    registry_orgs: Mapping[int, str] | None = None,
    counter: ConflictCounter | None = None,
) -> Registration:
    """Country from the RIR record; organisation from the RIR when known, else as2org.

    When both sources name the organisation differently the RIR name is kept
    and the disagreement is counted.
    """
    entry = registry.get(asn)
    country = entry.country if entry is not None and entry.status in ACTIVE_STATUSES else UNKNOWN_COUNTRY
    org_id, caida_name = as2org.get(asn, (None, None))
    rir_name = (registry_orgs or {}).get(asn)
    if rir_name and caida_name and rir_name != caida_name and counter is not None:
        counter.org_conflicts += 1
    return Registration(country, org_id, rir_name or caida_name)


def detect_bogons(observed: Iterable[int], registry: Mapping[int, RegistryEntry]) -> set[int]:
    """Observed ASNs with no registration, or whose registration is available/reserved."""
    out = set()
    for asn in observed:
        entry = registry.get(asn)
        if entry is None or entry.status not in ACTIVE_STATUSES:
            out.add(asn)
    return out


def geolocate_pops(observations: Iterable[PeerObservation], geo: GeoTable) -> tuple[dict[int, frozenset[str]], int]:
    """Countries of each AS's collector peer addresses, plus the count of unlocatable addresses."""
    result: dict[int, frozenset[str]] = {}
    unresolved = 0
    for obs in observations:
        countries = set()
        for address in obs.addresses:
            country = geo.country_of(address)
            if country is None:
                unresolved += 1
            else:
                countries.add(country)
        result[obs.asn] = frozenset(countries)
    return result, unresolved


@dataclass(frozen=True)
class PrefixGeoPolicy:
    """Controls prefix geolocation.

    ``max_blocks`` caps how many distinct geo pieces one prefix may split
    into; prefixes beyond it are skipped (and counted) rather than sampled.
    ``include_ambiguous`` also credits AS_SET origins.
    """

    max_blocks: int = 65536
    include_ambiguous: bool = False


@dataclass
class PrefixGeoStats:
    located: int = 0
    unlocated: int = 0
    oversized: int = 0


def geolocate_prefixes(
    table: PrefixOriginTable,
    geo: GeoTable,
    policy: PrefixGeoPolicy = PrefixGeoPolicy(),
    stats: PrefixGeoStats | None = None,
) -> dict[int, dict[str, float]]:
    """Country weights per origin AS from the geo blocks overlapping its prefixes.

    Each located prefix contributes a total weight of 1 to each of its
    origins, split by the share of its covered addresses in each country.
    """
    stats = stats if stats is not None else PrefixGeoStats()
    weights: dict[int, dict[str, float]] = defaultdict(lambda: defaultdict(float))
    for prefix, origins in table.entries.items():
        pieces = geo.index.partition(prefix)
        if len(pieces) > policy.max_blocks:
            stats.oversized += 1
            continue
        counts: dict[str, int] = defaultdict(int)
        for block, n in pieces:
            counts[block.country] += n
        total = sum(counts.values())
        if total == 0:
            stats.unlocated += 1
            continue
        stats.located += 1
        for asn, info in origins.items():
            if info.ambiguous and not policy.include_ambiguous:
                continue
            for country, n in counts.items():
                weights[asn][country] += n / total
    return {asn: dict(sorted(w.items())) for asn, w in sorted(weights.items())}


_LEGAL_SUFFIXES = {
    "ltd", "limited", "inc", "incorporated", "llc", "plc", "corp", "corporation", "co", "company",
    "sa", "sas", "sarl", "ag", "gmbh", "bv", "nv", "spa", "srl", "ab", "as", "oy", "pte", "pty",
    "jsc", "pjsc", "ojsc", "ooo", "zao", "oao", "kk", "sac", "sae", "de", "cv",
}


def normalize_org_name(name: str) -> str:
    """Lower-case, strip accents, punctuation and trailing legal-form words."""
    text = unicodedata.normalize("NFKD", name)
    text = "".join(ch for ch in text if not unicodedata.combining(ch)).lower()
    text = text.replace(".", "")  # S.A. -> sa
    words = re.sub(r"[^\w\s]|_", " ", text).split()
    while words and words[-1] in _LEGAL_SUFFIXES:
        words.pop()
    return " ".join(words)


def flag_state_owned(
    asn: int, dataset: Mapping[int, tuple[bool, str]], org_name: str | None
) -> bool | None:
    """True when listed state-owned under the same owner name; None when the
    listed owner no longer matches (stale entry); False when not listed."""
    hit = dataset.get(asn)
    if hit is None or not hit[0]:
        return False
    if org_name and normalize_org_name(hit[1]) == normalize_org_name(org_name):
        return True
    return None


def enrich(
    asns: Iterable[int],
    registry: Mapping[int, RegistryEntry],
    as2org: Mapping[int, tuple[str, str]] | None = None,
    *,
    registry_orgs: Mapping[int, str] | None = None,
    state_owned: Mapping[int, tuple[bool, str]] | None = None,
    pops: Mapping[int, frozenset[str]] | None = None,
    prefix_countries: Mapping[int, Mapping[str, float]] | None = None,
    counter: ConflictCounter | None = None,
) -> dict[int, AsRecord]:
    as2org = as2org or {}
    state_owned = state_owned or {}
    pops = pops or {}
    prefix_countries = prefix_countries or {}
    asns = sorted(set(asns))
    bogons = detect_bogons(asns, registry)
    out = {}
    for asn in asns:
        reg = resolve_registration(asn, registry, as2org, registry_orgs, counter)
        bogon = asn in bogons
        out[asn] = AsRecord(
            asn=asn,
            registration_country=UNKNOWN_COUNTRY if bogon else reg.country,
            org_id=reg.org_id,
            org_name=reg.org_name,
            state_owned=flag_state_owned(asn, state_owned, reg.org_name),
            pop_countries=frozenset(pops.get(asn, ())),
            prefix_countries=dict(prefix_countries.get(asn, {})),
            bogon=bogon,
        )
    return out


ENRICHMENT_COLUMNS = ["asn", "registration_country", "org_id", "org_name", "state_owned",
                      "pop_countries", "prefix_countries", "bogon"]


def state_owned_text(value: bool | None) -> str:
    return "unknown" if value is None else "true" if value else "false"


def write_enrichment_csv(records: Mapping[int, AsRecord], fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(ENRICHMENT_COLUMNS)
    for asn in sorted(records):
        r = records[asn]
        writer.writerow([
            r.asn, r.registration_country, r.org_id or "", r.org_name or "", state_owned_text(r.state_owned),
            "|".join(sorted(r.pop_countries)), json.dumps(dict(sorted(r.prefix_countries.items()))),
            "true" if r.bogon else "false",
        ])
