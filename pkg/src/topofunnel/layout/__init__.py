from .forceatlas2 import Embedding, LayoutError, LayoutParams, QuadTree, force_atlas2, write_embedding_csv
from .svg import EmbeddingMismatch, Styling, country_colours, node_radii, render_svg

__all__ = [
    "Embedding",
    "EmbeddingMismatch",
    "LayoutError",
    "LayoutParams",
    "QuadTree",
    "Styling",
    "country_colours",
    "force_atlas2",
    "node_radii",
    "render_svg",
    "write_embedding_csv",
]
