"""Per-country aggregation, foreign connectivity, observability and correlation."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from ..codes import UNKNOWN_COUNTRY
from ..enrichment import ACTIVE_STATUSES
from ..graph import Graph
from ..records import RegistryEntry
from .funnel import funnel_layers

MODES = ("sum", "mean", "stddev", "proportion")


def aggregate_by_country(
    values: Mapping[int, float], country: Mapping[int, str], mode: str
) -> dict[str, float]:
    """Group per-AS values by registration country.

    ``stddev`` is the population standard deviation; ``proportion`` divides
    each country's sum by the sum over all ASes (ZZ included).
    """
    if mode not in MODES:
        raise ValueError(f"unknown aggregation mode {mode!r}")
    groups: dict[str, list[float]] = defaultdict(list)
    for asn, value in values.items():
        groups[country.get(asn, UNKNOWN_COUNTRY)].append(float(value))
    if not groups:
        return {}
    out = {}
    total = math.fsum(v for vs in groups.values() for v in vs)
    for c in sorted(groups):
        vs = np.asarray(groups[c])
        if mode == "sum":
            out[c] = math.fsum(vs)
        elif mode == "mean":
            out[c] = float(vs.mean())
        elif mode == "stddev":
            out[c] = float(vs.std())
        else:
            out[c] = math.fsum(vs) / total if total else 0.0
    return out


@dataclass(frozen=True)
class CountryAggregate:
    country: str
    degree_sum: float
    degree_mean: float
    degree_stddev: float
    degree_proportion: float
    eigencentrality_sum: float
    mean_eccentricity: float
    observed: int
    registered: int


def country_aggregates(
    graph: Graph,
    eigen: np.ndarray,
    ecc: np.ndarray,
    registered: Mapping[str, int] | None = None,
) -> list[CountryAggregate]:
    registered = registered or {}
    degree = {asn: float(d) for asn, d in zip(graph.nodes, graph.degree)}
    eig = {asn: float(s) for asn, s in zip(graph.nodes, eigen)}
    eccs = {asn: float(e) for asn, e in zip(graph.nodes, ecc)}
    c = graph.country
    sums = aggregate_by_country(degree, c, "sum")
    means = aggregate_by_country(degree, c, "mean")
    stds = aggregate_by_country(degree, c, "stddev")
    props = aggregate_by_country(degree, c, "proportion")
    eig_sums = aggregate_by_country(eig, c, "sum")
    ecc_means = aggregate_by_country(eccs, c, "mean")
    counts: dict[str, int] = defaultdict(int)
    for asn in graph.nodes:
        counts[c[asn]] += 1
    return [
        CountryAggregate(k, sums[k], means[k], stds[k], props[k], eig_sums[k], ecc_means[k],
                         counts[k], registered.get(k, 0))
        for k in sorted(sums)
    ]


@dataclass(frozen=True)
class ForeignStats:
    country: str
    foreign_neighbours: int
    first_degree_domestic: int
    unique_registrants: int


def foreign_connectivity(graph: Graph, country: str) -> ForeignStats:
    """Foreign neighbours of a country and the domestic ASes that reach them.

    ZZ nodes count as foreign to every country. Domestic ASes without an
    organisation id count as their own registrant.
    """
    layers = funnel_layers(graph, country)
    first = layers.members[1] if len(layers.members) > 1 else ()
    registrants = {graph.org[graph.nodes[i]] or f"AS{graph.nodes[i]}" for i in first}
    return ForeignStats(country, len(layers.members[0]), len(first), len(registrants))


def degree_threshold_curve(graph: Graph, country: str, x_max: int) -> list[int]:
    """f(x) = number of domestic ASes with a foreign neighbour and degree >= x, for x = 1..x_max."""
    degrees = [
        int(graph.degree[i])
        for i in graph.domestic(country)
        if any(not graph.is_domestic(u, country) for u in graph.neighbours[i])
    ]
    return [sum(1 for d in degrees if d >= x) for x in range(1, x_max + 1)]


@dataclass(frozen=True)
class Observability:
    fraction: dict[str, float]
    registered: dict[str, int]
    observed: dict[str, int]
    bogons: int

    @property
    def overall(self) -> float:
        total = sum(self.registered.values())
        return sum(self.observed.values()) / total if total else 0.0


def observability_stats(registry: Iterable[RegistryEntry], graph: Graph) -> Observability:
    """Share of each country's registered ASes that appear in the graph, and the bogon count."""
    in_graph = set(graph.nodes)
    registered: dict[str, set[int]] = defaultdict(set)
    active = set()
    for entry in registry:
        if entry.status in ACTIVE_STATUSES:
            registered[entry.country].add(entry.asn)
            active.add(entry.asn)
    reg_counts = {c: len(s) for c, s in sorted(registered.items()) if s}
    obs_counts = {c: len(registered[c] & in_graph) for c in reg_counts}
    fraction = {c: obs_counts[c] / reg_counts[c] for c in reg_counts}
    return Observability(fraction, reg_counts, obs_counts, len(in_graph - active))


def pearson_correlation(x: Mapping[str, float | None], y: Mapping[str, float | None]) -> float:
    """Pearson r over countries present in both mappings with finite values."""
    keys = sorted(
        k for k in set(x) & set(y)
        if x[k] is not None and y[k] is not None and math.isfinite(x[k]) and math.isfinite(y[k])
    )
    if len(keys) < 3:
        raise ValueError(f"need at least 3 paired countries, have {len(keys)}")
    a = np.array([x[k] for k in keys], dtype=float)
    b = np.array([y[k] for k in keys], dtype=float)
    da, db = a - a.mean(), b - b.mean()
    denom = math.sqrt(float(da @ da) * float(db @ db))
    if denom == 0:
        raise ValueError("zero variance in one of the series")
    return float(da @ db / denom)
