"""Country codes and ASN number-space classification."""

from __future__ import annotations

import csv
from functools import lru_cache
from importlib import resources

UNKNOWN_COUNTRY = "ZZ"
AS_TRANS = 23456
MAX_ASN = 2**32 - 1

# RIR pseudo-codes and widely used user-assigned codes that appear in registry data.
_EXTRA_CODES = frozenset({"EU", "AP", "XK", UNKNOWN_COUNTRY})


def _data_lines(name: str) -> list[str]:
    text = resources.files("topofunnel.data").joinpath(name).read_text(encoding="utf-8")
    return [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]


@lru_cache(maxsize=None)
def iso_alpha2() -> frozenset[str]:
    return frozenset(ln.strip() for ln in _data_lines("iso3166_alpha2.txt"))


def _user_assigned(code: str) -> bool:
    # ISO 3166-1 reserves AA, QM-QZ, XA-XZ and ZZ for private use
    return code == "AA" or (code[0] == "Q" and "M" <= code[1] <= "Z") or code[0] == "X"


def is_country_code(code: str) -> bool:
    if len(code) != 2 or not code.isascii() or not code.isupper() or not code.isalpha():
        return False
    return code in iso_alpha2() or code in _EXTRA_CODES or _user_assigned(code)


def normalize_country(code: str | None) -> str:
    """Upper-case ``code``; anything that is not a usable alpha-2 code becomes ZZ."""
    if not code:
        return UNKNOWN_COUNTRY
    code = code.strip().upper()
    return code if is_country_code(code) else UNKNOWN_COUNTRY


@lru_cache(maxsize=None)
def vdem_country_names() -> dict[str, str]:
    rows = csv.DictReader(_data_lines("vdem_country_codes.csv"))
    return {row["country_name"]: row["alpha2"] for row in rows}


def is_private_asn(asn: int) -> bool:
    return 64512 <= asn <= 65534 or 4200000000 <= asn <= 4294967294


def is_reserved_asn(asn: int) -> bool:
    """Reserved, documentation or transition ASNs (RFC 1930, 5398, 6793, 7300)."""
    return (
        asn in (0, AS_TRANS, 65535, MAX_ASN)
        or 64496 <= asn <= 64511
        or 65536 <= asn <= 65551
    )
