"""SVG 1.1 rendering of an embedded topology, one colour per country."""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Mapping
from xml.sax.saxutils import quoteattr

import numpy as np

from ..codes import UNKNOWN_COUNTRY
from ..graph import Graph
from .forceatlas2 import Embedding

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#bcbd22",
    "#17becf", "#aec7e8", "#ffbb78", "#98df8a", "#ff9896", "#c5b0d5", "#c49c94", "#f7b6d2",
    "#dbdb8d", "#9edae5", "#393b79", "#637939", "#8c6d31", "#843c39", "#7b4173", "#5254a3",
    "#8ca252", "#bd9e39", "#ad494a", "#a55194", "#6b6ecf", "#b5cf6b", "#e7ba52", "#d6616b",
    "#ce6dbd", "#3182bd", "#e6550d", "#31a354", "#756bb1", "#636363", "#fd8d3c", "#74c476",
)
UNKNOWN_COLOUR = "#9e9e9e"


class EmbeddingMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Styling:
    width: int = 1000
    height: int = 1000
    margin: float = 20.0
    min_radius: float = 2.0
    max_radius: float = 12.0
    edge_colour: str = "#c8c8c8"
    edge_width: float = 0.5
    edge_opacity: float = 0.6
    background: str | None = "#ffffff"

    def __post_init__(self) -> None:
        if not 0 < self.min_radius <= self.max_radius:
            raise ValueError("need 0 < min_radius <= max_radius")


def country_colours(countries) -> dict[str, str]:
    """Colour per country: crc32 of the code picks a palette slot, collisions probe forward.

    Distinct countries get distinct colours while there are at most
    ``len(PALETTE)`` of them; beyond that slots are reused. ZZ is always grey.
    """
    out = {}
    taken: set[int] = set()
    for c in sorted(set(countries)):
        if c == UNKNOWN_COUNTRY:
            out[c] = UNKNOWN_COLOUR
            continue
        slot = zlib.crc32(c.encode("ascii")) % len(PALETTE)
        if len(taken) < len(PALETTE):
            while slot in taken:
                slot = (slot + 1) % len(PALETTE)
        taken.add(slot)
        out[c] = PALETTE[slot]
    return out


def node_radii(scores: np.ndarray | None, n: int, styling: Styling) -> np.ndarray:
    if scores is None:
        return np.full(n, styling.min_radius)
    scores = np.asarray(scores, dtype=float)
    lo, hi = float(scores.min()), float(scores.max())
    if hi == lo:
        return np.full(n, (styling.min_radius + styling.max_radius) / 2)
    frac = (scores - lo) / (hi - lo)
    return styling.min_radius + frac * (styling.max_radius - styling.min_radius)


def _num(x: float) -> str:
    return f"{x:.3f}"


def render_svg(
    graph: Graph,
    embedding: Embedding,
    styling: Styling = Styling(),
    scores: Mapping[int, float] | np.ndarray | None = None,
) -> str:
    """Render nodes as circles over edges. ``scores`` (per ASN or aligned with graph.nodes) set radii."""
    if tuple(embedding.nodes) != tuple(graph.nodes):
        raise EmbeddingMismatch("embedding nodes do not match graph nodes")
    n = len(graph)
    pos = np.asarray(embedding.positions, dtype=float)
    if pos.shape != (n, 2) or not np.isfinite(pos).all():
        raise EmbeddingMismatch("embedding positions must be finite and shaped (n, 2)")
    if isinstance(scores, Mapping):
        scores = np.array([scores[asn] for asn in graph.nodes], dtype=float)
    radii = node_radii(scores, n, styling)

    inner_w = styling.width - 2 * styling.margin
    inner_h = styling.height - 2 * styling.margin
    lo = pos.min(axis=0) if n else np.zeros(2)
    span = (pos.max(axis=0) - lo) if n else np.ones(2)
    scale = min(inner_w / span[0] if span[0] > 0 else np.inf, inner_h / span[1] if span[1] > 0 else np.inf)
    if not np.isfinite(scale):
        scale = 1.0
    off_x = styling.margin + (inner_w - span[0] * scale) / 2
    off_y = styling.margin + (inner_h - span[1] * scale) / 2
    xs = off_x + (pos[:, 0] - lo[0]) * scale
    ys = styling.height - (off_y + (pos[:, 1] - lo[1]) * scale)  # y axis up

    colours = country_colours(graph.country.values())
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{styling.width}" '
        f'height="{styling.height}" viewBox="0 0 {styling.width} {styling.height}">',
    ]
    if styling.background:
        lines.append(f'<rect width="100%" height="100%" fill={quoteattr(styling.background)}/>')
    lines.append(
        f'<g id="edges" stroke={quoteattr(styling.edge_colour)} stroke-width="{styling.edge_width}" '
        f'stroke-opacity="{styling.edge_opacity}">'
    )
    for a, b in graph.edges:
        i, j = graph.index[a], graph.index[b]
        lines.append(f'<line x1="{_num(xs[i])}" y1="{_num(ys[i])}" x2="{_num(xs[j])}" y2="{_num(ys[j])}"/>')
    lines.append("</g>")
    lines.append('<g id="nodes" stroke="#ffffff" stroke-width="0.3">')
    # large nodes last so hubs stay visible
    for i in sorted(range(n), key=lambda k: (radii[k], graph.nodes[k])):
        asn = graph.nodes[i]
        c = graph.country[asn]
        lines.append(
            f'<circle cx="{_num(xs[i])}" cy="{_num(ys[i])}" r="{_num(radii[i])}" fill="{colours[c]}">'
            f"<title>AS{asn} {c}</title></circle>"
        )
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
