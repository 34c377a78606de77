"""ForceAtlas2 force-directed layout with Barnes-Hut repulsion.

Forces follow Jacomy et al.'s formulation: node mass is degree + 1,
repulsion between nodes is ``kr * m_i * m_j / d``, attraction along an edge
is ``w * d`` (``w * log(1 + d)`` in LinLog mode) and gravity pulls each node
towards the origin with ``kg * m_i`` (``kg * m_i * d`` in strong-gravity
mode). Step sizes use the published adaptive speed / swinging control.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import IO

import numpy as np

from ..graph import Graph


class LayoutError(RuntimeError):
    pass


@dataclass(frozen=True)
class LayoutParams:
    scaling: float = 2.0
    gravity: float = 1.0
    barnes_hut_theta: float = 1.0
    edge_weight_influence: float = 0.0
    max_iterations: int = 1000
    epsilon: float = 1e-3  # convergence: mean displacement below epsilon * node spacing
    seed: int = 0
    jitter_tolerance: float = 1.0
    settle_factor: float = 1.0  # damping starts once displacement < settle_factor * epsilon * spacing
    lin_log: bool = False
    strong_gravity: bool = False

    def __post_init__(self) -> None:
        if self.scaling <= 0:
            raise ValueError("scaling must be positive")
        if self.gravity < 0:
            raise ValueError("gravity must be non-negative")
        if not 0 < self.barnes_hut_theta <= 1:
            raise ValueError("barnes_hut_theta must lie in (0, 1]")
        if self.edge_weight_influence < 0:
            raise ValueError("edge_weight_influence must be non-negative")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.epsilon <= 0 or self.jitter_tolerance <= 0:
            raise ValueError("epsilon and jitter_tolerance must be positive")
        if self.settle_factor < 1:
            raise ValueError("settle_factor must be at least 1")


@dataclass
class Embedding:
    nodes: tuple[int, ...]
    positions: np.ndarray  # shape (n, 2), row i belongs to nodes[i]
    iterations: int
    mean_displacement: float
    history: list[float] = field(default_factory=list, repr=False)

    def as_dict(self) -> dict[int, tuple[float, float]]:
        return {asn: (float(x), float(y)) for asn, (x, y) in zip(self.nodes, self.positions)}


class QuadTree:
    """Flat-array quadtree holding mass and centre of mass per cell."""

    MAX_DEPTH = 40

    def __init__(self, pos: np.ndarray, mass: np.ndarray):
        self.pos = pos
        self.mass_of = mass
        self.cx: list[float] = []  # box centre
        self.cy: list[float] = []
        self.half: list[float] = []
        self.mass: list[float] = []
        self.comx: list[float] = []
        self.comy: list[float] = []
        self.children: list[list[int]] = []
        self.leaf: list[bool] = []
        self.node_leaf = np.zeros(len(pos), dtype=np.int64)
        lo = pos.min(axis=0)
        hi = pos.max(axis=0)
        centre = (lo + hi) / 2
        half = float(max(hi[0] - lo[0], hi[1] - lo[1])) / 2 * 1.0001 + 1e-12
        self._build(np.arange(len(pos)), float(centre[0]), float(centre[1]), half, 0)
        self.arrays = {
            "cx": np.array(self.cx), "cy": np.array(self.cy), "half": np.array(self.half),
            "mass": np.array(self.mass), "comx": np.array(self.comx), "comy": np.array(self.comy),
            "children": np.array(self.children, dtype=np.int64).reshape(-1, 4),
            "leaf": np.array(self.leaf, dtype=bool),
        }

    def _build(self, idx: np.ndarray, cx: float, cy: float, half: float, depth: int) -> int:
        cell = len(self.cx)
        m = self.mass_of[idx]
        total = float(m.sum())
        p = self.pos[idx]
        self.cx.append(cx)
        self.cy.append(cy)
        self.half.append(half)
        self.mass.append(total)
        self.comx.append(float(m @ p[:, 0]) / total)
        self.comy.append(float(m @ p[:, 1]) / total)
        self.children.append([-1, -1, -1, -1])
        is_leaf = len(idx) == 1 or depth >= self.MAX_DEPTH
        self.leaf.append(is_leaf)
        if is_leaf:
            self.node_leaf[idx] = cell
            return cell
        right = p[:, 0] >= cx
        top = p[:, 1] >= cy
        h = half / 2
        for q, (mask, ox, oy) in enumerate((
            (~right & ~top, -h, -h), (right & ~top, h, -h), (~right & top, -h, h), (right & top, h, h),
        )):
            sub = idx[mask]
            if len(sub):
                self.children[cell][q] = self._build(sub, cx + ox, cy + oy, h, depth + 1)
        return cell

    def repulsion(self, kr: float, theta: float) -> np.ndarray:
        """Approximate repulsive force on every node."""
        a = self.arrays
        pos, mass_of = self.pos, self.mass_of
        n = len(pos)
        force = np.zeros((n, 2))
        node = np.arange(n)
        cell = np.zeros(n, dtype=np.int64)
        while node.size:
            cmass = a["mass"][cell]
            comx, comy = a["comx"][cell], a["comy"][cell]
            own = self.node_leaf[node] == cell
            if own.any():
                # a node's own leaf: repel only from the other (coincident) members
                rest = cmass[own] - mass_of[node[own]]
                safe = np.where(rest > 0, rest, 1.0)
                comx = comx.copy()
                comy = comy.copy()
                comx[own] = (comx[own] * cmass[own] - mass_of[node[own]] * pos[node[own], 0]) / safe
                comy[own] = (comy[own] * cmass[own] - mass_of[node[own]] * pos[node[own], 1]) / safe
                cmass = cmass.copy()
                cmass[own] = np.where(rest > 1e-9, rest, 0.0)
            dx = pos[node, 0] - comx
            dy = pos[node, 1] - comy
            d2 = dx * dx + dy * dy
            half = a["half"][cell]
            inside = (np.abs(pos[node, 0] - a["cx"][cell]) <= half) & (np.abs(pos[node, 1] - a["cy"][cell]) <= half)
            far = (2 * half) ** 2 < theta * theta * d2
            accept = a["leaf"][cell] | (far & ~inside)
            hit = accept & (d2 > 0) & (cmass > 0)
            if hit.any():
                coef = kr * mass_of[node[hit]] * cmass[hit] / d2[hit]
                np.add.at(force[:, 0], node[hit], coef * dx[hit])
                np.add.at(force[:, 1], node[hit], coef * dy[hit])
            open_ = ~accept
            if not open_.any():
                break
            kids = a["children"][cell[open_]]
            rep = np.repeat(node[open_], 4)
            kids = kids.ravel()
            keep = kids >= 0
            node, cell = rep[keep], kids[keep]
        return force


def _initial_positions(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    radius = math.sqrt(max(n, 1)) * 10
    r = radius * np.sqrt(rng.random(n))
    a = 2 * np.pi * rng.random(n)
    return np.column_stack([r * np.cos(a), r * np.sin(a)])


def force_atlas2(graph: Graph, params: LayoutParams = LayoutParams(), weights: np.ndarray | None = None) -> Embedding:
    """Lay out ``graph`` in 2-D. ``weights`` are optional per-edge weights aligned with ``graph.edges``.

    Stops when the mean node displacement of an iteration falls below
    ``epsilon`` times the node spacing (RMS distance from the centroid over
    sqrt(n)), or after ``max_iterations``. Deterministic for a fixed seed.

    The adaptive speed makes displacement jitter, so the run ends with a
    settling phase in which each step is shrunk as needed to keep the mean
    displacement non-increasing. Settling starts once displacement drops below
    ``settle_factor * epsilon`` times the spacing, or at 90% of the iteration
    budget. Convergence is only declared after settling has lasted at least a
    tenth of all iterations.
    """
    n = len(graph)
    if n == 0:
        raise ValueError("cannot lay out an empty graph")
    pos = _initial_positions(n, params.seed)
    mass = graph.degree.astype(float) + 1.0
    if graph.edges:
        src = np.array([graph.index[a] for a, _ in graph.edges])
        dst = np.array([graph.index[b] for _, b in graph.edges])
    else:
        src = dst = np.zeros(0, dtype=np.int64)
    w = np.ones(len(src)) if weights is None or params.edge_weight_influence == 0 else \
        np.asarray(weights, dtype=float) ** params.edge_weight_influence

    speed, efficiency = 1.0, 1.0
    old = np.zeros((n, 2))
    history: list[float] = []
    displacement = float("inf")
    settle_from = 0  # first settling iteration, 0 while not settling
    it = 0
    for it in range(1, params.max_iterations + 1):
        force = QuadTree(pos, mass).repulsion(params.scaling, params.barnes_hut_theta) if n > 1 else np.zeros((n, 2))

        dist = np.hypot(pos[:, 0], pos[:, 1])
        if params.strong_gravity:
            force -= (params.gravity * mass)[:, None] * pos
        else:
            with np.errstate(invalid="ignore", divide="ignore"):
                unit = np.where(dist[:, None] > 0, pos / dist[:, None], 0.0)
            force -= (params.gravity * mass)[:, None] * unit

        if len(src):
            delta = pos[src] - pos[dst]
            if params.lin_log:
                d = np.hypot(delta[:, 0], delta[:, 1])
                with np.errstate(invalid="ignore", divide="ignore"):
                    scale = np.where(d > 0, np.log1p(d) / d, 0.0)
                pull = (w * scale)[:, None] * delta
            else:
                pull = w[:, None] * delta
            np.add.at(force, src, -pull)
            np.add.at(force, dst, pull)

        swing = mass * np.hypot(*(old - force).T)
        traction = mass * 0.5 * np.hypot(*(old + force).T)
        total_swing = float(swing.sum())
        total_traction = float(traction.sum())
        if not (math.isfinite(total_swing) and math.isfinite(total_traction)):
            raise LayoutError(f"non-finite forces at iteration {it}")
        if total_swing == 0:
            displacement = 0.0
            history.append(0.0)
            break

        estimated = 0.05 * math.sqrt(n)
        jt = params.jitter_tolerance * max(math.sqrt(estimated), min(10.0, estimated * total_traction / n ** 2))
        if total_swing / total_traction > 2.0:
            if efficiency > 0.05:
                efficiency *= 0.5
            jt = max(jt, params.jitter_tolerance)
        target = jt * efficiency * total_traction / total_swing
        if total_swing > jt * total_traction:
            if efficiency > 0.05:
                efficiency *= 0.7
        elif speed < 1000:
            efficiency *= 1.3
        speed = speed + min(target - speed, 0.5 * speed)

        factor = speed / (1.0 + np.sqrt(speed * swing))
        step = force * factor[:, None]
        if not np.isfinite(step).all():
            raise LayoutError(f"non-finite displacement at iteration {it}")
        moved = float(np.hypot(step[:, 0], step[:, 1]).mean())
        if settle_from and moved > displacement:
            step *= displacement / moved
            moved = displacement
        pos = pos + step
        old = force
        displacement = moved
        history.append(displacement)
        centred = pos - pos.mean(axis=0)
        threshold = params.epsilon * max(math.sqrt(float((centred ** 2).sum(axis=1).mean()) / n), 1e-12)
        if not settle_from and (displacement < params.settle_factor * threshold or it >= 0.9 * params.max_iterations):
            settle_from = it
        if settle_from and displacement < threshold and it - settle_from + 1 >= 0.1 * it:
            break
    return Embedding(graph.nodes, pos, it, displacement, history)


def write_embedding_csv(embedding: Embedding, fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["asn", "x", "y"])
    for asn, (x, y) in zip(embedding.nodes, embedding.positions):
        writer.writerow([asn, repr(float(x)), repr(float(y))])
