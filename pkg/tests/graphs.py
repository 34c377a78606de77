"""Random graph generators shared by the metric tests."""

import random


def random_graph(rng: random.Random, n: int, p: float, connected: bool = False):
    edges = set()
    if connected:
        for v in range(1, n):
            u = rng.randrange(v)
            edges.add((u, v))
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < p:
                edges.add((a, b))
    return sorted(edges)
