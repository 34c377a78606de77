"""Funnelling: how a country's external connectivity narrows through few ASes.

Layer 0 holds the foreign ASes adjacent to the country. Layer n+1 holds the
domestic neighbours of layer n not already placed. The layer sizes give the
relative downstream change per hop; the layered DAG (edges stepping exactly
one layer deeper) gives each AS's downstream set for the cumulative
downstream burden.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..graph import Graph


@dataclass(frozen=True)
class FunnelLayers:
    country: str
    members: tuple[tuple[int, ...], ...]  # node indices per layer, sorted
    unreachable: tuple[int, ...]  # domestic nodes in no layer

    @property
    def sizes(self) -> list[int]:
        return [len(layer) for layer in self.members]


@dataclass(frozen=True)
class FunnelProfile:
    country: str
    layers: tuple[int, ...]
    relative_changes: tuple[float, ...]
    burden: tuple[float, ...]
    unreachable_domestic: int


def funnel_layers(graph: Graph, country: str) -> FunnelLayers:
    domestic = set(graph.domestic(country))
    d0 = sorted({u for v in domestic for u in graph.neighbours[v] if u not in domestic})
    layers = [tuple(d0)]
    placed = set(d0)
    current = d0
    while current:
        nxt = sorted({v for u in current for v in graph.neighbours[u] if v in domestic and v not in placed})
        if not nxt:
            break
        layers.append(tuple(nxt))
        placed.update(nxt)
        current = nxt
    unreachable = tuple(sorted(domestic - placed))
    return FunnelLayers(country, tuple(layers), unreachable)


def relative_downstream_change(sizes: list[int] | tuple[int, ...]) -> list[float]:
    """(|d[n+1]| - |d[n]|) / |d[n]| for each consecutive pair with |d[n]| > 0."""
    return [(b - a) / a for a, b in zip(sizes, sizes[1:]) if a > 0]


def downstream_counts(graph: Graph, layers: FunnelLayers) -> dict[int, int]:
    """Number of domestic ASes reachable from each layered AS by stepping one layer deeper at a time."""
    depth = {v: n for n, layer in enumerate(layers.members) if n >= 1 for v in layer}
    bit = {v: 1 << i for i, v in enumerate(sorted(depth))}
    below: dict[int, int] = {}
    for n in range(len(layers.members) - 1, 0, -1):
        for v in layers.members[n]:
            mask = 0
            for c in graph.neighbours[v]:
                if depth.get(c) == n + 1:
                    mask |= bit[c] | below[c]
            below[v] = mask
    return {v: mask.bit_count() for v, mask in below.items()}


def cumulative_downstream_burden(graph: Graph, country: str, layers: FunnelLayers | None = None) -> list[float]:
    """Mean per-hop downstream burden, stopping before the first hop whose mean is 0.

    For each AS at hop n with a nonzero downstream count, its burden is that
    count divided by the number of domestic ASes with foreign neighbours
    (|d1|); the hop value is the mean over those ASes.
    """
    layers = layers if layers is not None else funnel_layers(graph, country)
    if len(layers.members) < 2 or not layers.members[1]:
        return []
    first_degree = len(layers.members[1])
    counts = downstream_counts(graph, layers)
    out = []
    for layer in layers.members[1:]:
        burdens = [counts[v] / first_degree for v in layer if counts[v] > 0]
        value = sum(burdens) / len(burdens) if burdens else 0.0
        if value == 0:
            break
        out.append(value)
    return out


def funnel_profile(graph: Graph, country: str) -> FunnelProfile:
    layers = funnel_layers(graph, country)
    sizes = layers.sizes
    return FunnelProfile(
        country=country,
        layers=tuple(sizes),
        relative_changes=tuple(relative_downstream_change(sizes)),
        burden=tuple(cumulative_downstream_burden(graph, country, layers)),
        unreachable_domestic=len(layers.unreachable),
    )
