"""MaxMind GeoLite2 City CSV (blocks + locations) reduced to country level."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, TextIO

from ..codes import UNKNOWN_COUNTRY, normalize_country
from ..prefixtrie import IPAddress, IPNetwork, PrefixTrie, as_network
from ..records import ParseStats


@dataclass(frozen=True)
class GeoBlock:
    prefix: IPNetwork
    country: str
    city: str | None = None


@dataclass
class GeoTable:
    """Geolocation blocks with a longest-prefix-match index.

    Overlapping blocks are allowed; an address resolves to its most specific
    block. City names are kept for diagnostics only.
    """

    blocks: list[GeoBlock]
    index: PrefixTrie[GeoBlock] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.index = PrefixTrie()
        for block in self.blocks:
            self.index.insert(block.prefix, block)

    def country_of(self, address: str | IPAddress) -> str | None:
        hit = self.index.lookup(address)
        return hit[1].country if hit else None

    def country_shares(self, prefix: str | IPNetwork) -> dict[str, int]:
        """Address counts of ``prefix`` per country of the matching block."""
        shares: dict[str, int] = {}
        for block, count in self.index.partition(as_network(prefix)):
            shares[block.country] = shares.get(block.country, 0) + count
        return shares


def parse_geolite_blocks(
    blocks: TextIO | Iterable[TextIO],
    locations: TextIO,
    *,
    stats: ParseStats | None = None,
) -> GeoTable:
    """Join GeoLite2 block rows to location rows by geoname id.

    ``blocks`` may be one file or several (IPv4 and IPv6 block files). Blocks
    whose geoname id has no location row keep country ZZ and are counted.
    """
    stats = stats if stats is not None else ParseStats()
    places: dict[str, tuple[str, str | None]] = {}
    for row in csv.DictReader(locations):
        country = normalize_country(row.get("country_iso_code"))
        places[row["geoname_id"]] = (country, row.get("city_name") or None)

    files = [blocks] if hasattr(blocks, "read") else list(blocks)  # type: ignore[arg-type]
    out: list[GeoBlock] = []
    for handle in files:
        for row in csv.DictReader(handle):
            gid = row.get("geoname_id") or row.get("registered_country_geoname_id") or ""
            place = places.get(gid)
            if place is None:
                stats.error(f"block {row['network']}: unknown geoname id {gid!r}")
                place = (UNKNOWN_COUNTRY, None)
            out.append(GeoBlock(as_network(row["network"]), place[0], place[1]))
            stats.records += 1
    return GeoTable(out)
