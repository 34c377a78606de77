"""Varieties of Democracy country-year CSV."""

from __future__ import annotations

import csv
import logging
import math
from typing import Mapping, TextIO

from ..codes import vdem_country_names
from ..records import IndicatorRow, ParseStats

log = logging.getLogger(__name__)


def _value(text: str | None) -> float | None:
    if text is None or not text.strip() or text.strip().upper() == "NA":
        return None
    value = float(text)
    return None if math.isnan(value) else value


def parse_vdem(
    stream: TextIO,
    year: int,
    *,
    extra_names: Mapping[str, str] | None = None,
    stats: ParseStats | None = None,
) -> list[IndicatorRow]:
    """Rows for ``year`` keyed by alpha-2 code.

    Country names go through the bundled name table (plus ``extra_names``);
    names it does not know are dropped with a log line, never guessed.
    """
    stats = stats if stats is not None else ParseStats()
    names = dict(vdem_country_names())
    if extra_names:
        names.update(extra_names)
    rows = []
    for row in csv.DictReader(stream):
        try:
            row_year = int(float(row["year"]))
        except (KeyError, ValueError):
            stats.error("row without a usable year")
            continue
        if row_year != year:
            continue
        name = row.get("country_name", "").strip()
        code = names.get(name)
        if code is None:
            log.warning("V-Dem country %r has no alpha-2 mapping; dropped", name)
            stats.skipped += 1
            continue
        rows.append(IndicatorRow(code, year, _value(row.get("v2mecenefi")), _value(row.get("v2x_polyarchy"))))
        stats.records += 1
    return rows
