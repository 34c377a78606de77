from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..graph import Graph


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass
class Eigencentrality:
    scores: np.ndarray  # max-normalized, aligned with Graph.nodes
    eigenvalue: float
    residual: float  # ||Ax - lambda x||_inf / lambda on the normalized vector
    iterations: int

    def by_asn(self, graph: Graph) -> dict[int, float]:
        return {asn: float(s) for asn, s in zip(graph.nodes, self.scores)}


def eigencentrality(graph: Graph, tolerance: float = 1e-10, max_iterations: int = 100_000) -> Eigencentrality:
    """Power iteration for the dominant adjacency eigenvector, scaled so max = 1.

    Iterates with A + I, which has the same eigenvectors as A but a strictly
    dominant Perron root, so bipartite graphs (stars, paths) converge instead
    of oscillating. Stops when the max-normalized vector moves less than
    ``tolerance`` in the L-infinity norm.

    On a disconnected graph the vector concentrates on the component with the
    largest eigenvalue; other components decay towards 0.
    """
    n = len(graph)
    if n == 0:
        raise ValueError("eigencentrality of an empty graph")
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    A = graph.csr
    x = np.ones(n)
    for it in range(1, max_iterations + 1):
        y = A @ x + x
        y /= y.max()
        delta = float(np.abs(y - x).max())
        x = y
        if delta < tolerance:
            lam, residual = _rayleigh(A, x)
            return Eigencentrality(x, lam, residual, it)
    _, residual = _rayleigh(A, x)
    raise ConvergenceError(f"power iteration did not converge in {max_iterations} iterations "
                           f"(residual {residual:.3g})", residual)


def _rayleigh(A, x: np.ndarray) -> tuple[float, float]:
    ax = A @ x
    lam = float(x @ ax / (x @ x))
    if lam <= 0:
        return 0.0, 0.0
    return lam, float(np.abs(ax - lam * x).max() / lam)
