"""Distance-based and local-structure graph statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csgraph

from ..graph import Graph

_CELLS_PER_BATCH = 20_000_000


def _bfs_rows(graph: Graph, sources: np.ndarray):
    """Yield (sources, hop-distance rows) in memory-bounded batches."""
    n = len(graph)
    step = max(1, _CELLS_PER_BATCH // max(n, 1))
    for start in range(0, len(sources), step):
        batch = sources[start:start + step]
        yield batch, csgraph.shortest_path(graph.csr, directed=False, unweighted=True, indices=batch)


def eccentricity(graph: Graph) -> np.ndarray:
    """Greatest hop distance from each node to any node of its own component.

    Isolated nodes get 0.
    """
    n = len(graph)
    out = np.zeros(n, dtype=np.int64)
    if n == 0:
        return out
    for batch, dist in _bfs_rows(graph, np.arange(n)):
        dist[np.isinf(dist)] = 0
        out[batch] = dist.max(axis=1).astype(np.int64)
    return out


def local_clustering(graph: Graph) -> np.ndarray:
    nbr = [set(x) for x in graph.neighbours]
    coeff = np.zeros(len(graph))
    for v, nv in enumerate(nbr):
        k = len(nv)
        if k < 2:
            continue
        links = sum(len(nv & nbr[u]) for u in nv) / 2
        coeff[v] = 2 * links / (k * (k - 1))
    return coeff


def clustering_coefficient(graph: Graph) -> float:
    """Mean local clustering over all nodes (nodes of degree < 2 count as 0)."""
    if len(graph) == 0:
        return 0.0
    return float(local_clustering(graph).mean())


def largest_component(graph: Graph) -> np.ndarray:
    if len(graph) == 0:
        return np.zeros(0, dtype=np.int64)
    _, labels = csgraph.connected_components(graph.csr, directed=False)
    sizes = np.bincount(labels)
    return np.flatnonzero(labels == int(np.argmax(sizes)))


@dataclass(frozen=True)
class PathLengthEstimate:
    mean: float
    stderr: float
    exact: bool
    sources: int
    component_size: int


def average_path_length(
    graph: Graph, sample_size: int = 500, seed: int = 0, exact_threshold: int = 2000
) -> PathLengthEstimate:
    """Mean shortest-path length over pairs in the largest connected component.

    Exact when the component has at most ``exact_threshold`` nodes; otherwise
    estimated from ``sample_size`` uniformly drawn BFS sources, with the
    standard error of the per-source means.
    """
    comp = largest_component(graph)
    m = len(comp)
    if m < 2:
        return PathLengthEstimate(0.0, 0.0, True, m, m)
    exact = m <= exact_threshold
    if exact:
        sources = comp
    else:
        rng = np.random.default_rng(seed)
        sources = np.sort(rng.choice(comp, size=min(sample_size, m), replace=False))
    per_source = []
    for _, dist in _bfs_rows(graph, sources):
        reach = dist[:, comp]
        per_source.extend(reach.sum(axis=1) / (m - 1))
    per_source = np.asarray(per_source)
    mean = float(per_source.mean())
    if exact or len(per_source) < 2:
        return PathLengthEstimate(mean, 0.0, exact, len(sources), m)
    stderr = float(per_source.std(ddof=1) / np.sqrt(len(per_source)))
    return PathLengthEstimate(mean, stderr, False, len(sources), m)
