"""Labelled AS topology graph."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

from .adjacency import AdjacencySet, edge
from .codes import UNKNOWN_COUNTRY
from .enrichment import AsRecord


class Graph:
    """Immutable undirected simple graph over ASNs, indexed for the metrics.

    Nodes are kept sorted by ASN; node ``i`` of every array-valued result is
    ``nodes[i]``. ``country`` maps ASN to registration country (ZZ when
    unknown) and ``org`` to organisation id.
    """

    def __init__(
        self,
        edges: Iterable[tuple[int, int]],
        nodes: Iterable[int] = (),
        country: Mapping[int, str] | None = None,
        org: Mapping[int, str | None] | None = None,
    ):
        pairs = sorted({edge(a, b) for a, b in edges if a != b})
        self.edges: tuple[tuple[int, int], ...] = tuple(pairs)
        self.nodes: tuple[int, ...] = tuple(sorted(set(nodes) | {a for p in pairs for a in p}))
        self.index = {asn: i for i, asn in enumerate(self.nodes)}
        country = country or {}
        self.country = {asn: country.get(asn, UNKNOWN_COUNTRY) for asn in self.nodes}
        org = org or {}
        self.org = {asn: org.get(asn) for asn in self.nodes}
        n = len(self.nodes)
        nbrs: list[list[int]] = [[] for _ in range(n)]
        for a, b in pairs:
            ia, ib = self.index[a], self.index[b]
            nbrs[ia].append(ib)
            nbrs[ib].append(ia)
        self.neighbours: tuple[tuple[int, ...], ...] = tuple(tuple(sorted(x)) for x in nbrs)

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def degree(self) -> np.ndarray:
        return np.array([len(x) for x in self.neighbours], dtype=np.int64)

    @cached_property
    def csr(self) -> sp.csr_matrix:
        n = len(self.nodes)
        if not self.edges:
            return sp.csr_matrix((n, n), dtype=np.float64)
        src = np.array([self.index[a] for a, _ in self.edges])
        dst = np.array([self.index[b] for _, b in self.edges])
        rows = np.concatenate([src, dst])
        cols = np.concatenate([dst, src])
        data = np.ones(rows.size, dtype=np.float64)
        return sp.csr_matrix((data, (rows, cols)), shape=(n, n))

    def countries(self) -> list[str]:
        """Countries with at least one node, ZZ excluded."""
        return sorted({c for c in self.country.values() if c != UNKNOWN_COUNTRY})

    def domestic(self, country: str) -> list[int]:
        """Node indices registered in ``country``."""
        return [i for i, asn in enumerate(self.nodes) if self.country[asn] == country]

    def is_domestic(self, i: int, country: str) -> bool:
        return self.country[self.nodes[i]] == country


@dataclass(frozen=True)
class TopologySnapshot:
    captured_at: int
    nodes: dict[int, AsRecord]
    edges: AdjacencySet
    provenance: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for a, b in self.edges:
            if a not in self.nodes or b not in self.nodes:
                raise ValueError(f"edge {a}-{b} has an endpoint without a node record")

    def graph(self) -> Graph:
        return Graph(
            self.edges.edges.keys(),
            self.nodes.keys(),
            {asn: r.registration_country for asn, r in self.nodes.items()},
            {asn: r.org_id for asn, r in self.nodes.items()},
        )


def build_topology(
    adjacencies: AdjacencySet,
    enrichment: Mapping[int, AsRecord],
    captured_at: int,
    provenance: Mapping | None = None,
) -> TopologySnapshot:
    """One node per ASN that appears in an edge; enrichment-only ASNs are left out.

    Edge endpoints without an enrichment record get a minimal ZZ record marked
    as a bogon candidate.
    """
    nodes = {}
    synthesized = 0
    for asn in sorted(adjacencies.nodes()):
        record = enrichment.get(asn)
        if record is None:
            record = AsRecord(asn, UNKNOWN_COUNTRY, bogon=True)
            synthesized += 1
        nodes[asn] = record
    prov = dict(provenance or {})
    prov.setdefault("synthesized_nodes", synthesized)
    prov = {k: prov[k] for k in sorted(prov)}
    return TopologySnapshot(captured_at, nodes, adjacencies.sorted(), prov)
