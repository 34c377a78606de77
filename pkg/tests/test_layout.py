import io
import random
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topofunnel.graph import Graph
from topofunnel.layout import (
    EmbeddingMismatch,
    LayoutParams,
    QuadTree,
    Styling,
    country_colours,
    force_atlas2,
    node_radii,
    render_svg,
    write_embedding_csv,
)
from topofunnel.layout.svg import PALETTE, UNKNOWN_COLOUR

from graphs import random_graph


def exact_repulsion(pos, mass, kr):
    delta = pos[:, None, :] - pos[None, :, :]
    d2 = (delta ** 2).sum(axis=2)
    np.fill_diagonal(d2, np.inf)
    coef = kr * mass[:, None] * mass[None, :] / d2
    return (coef[:, :, None] * delta).sum(axis=1)


def test_barnes_hut_converges_to_exact_sum():
    rng = np.random.default_rng(0)
    pos = rng.normal(size=(300, 2)) * 50
    mass = rng.integers(1, 6, size=300).astype(float)
    exact = exact_repulsion(pos, mass, 2.0)
    tight = QuadTree(pos, mass).repulsion(2.0, 1e-9)
    assert np.allclose(tight, exact, rtol=1e-9, atol=1e-9)
    loose = QuadTree(pos, mass).repulsion(2.0, 1.0)
    err = np.linalg.norm(loose - exact, axis=1) / np.linalg.norm(exact, axis=1)
    assert np.median(err) < 0.05


def test_coincident_nodes_do_not_explode():
    pos = np.array([[1.0, 1.0], [1.0, 1.0], [3.0, 1.0]])
    force = QuadTree(pos, np.ones(3)).repulsion(1.0, 1.0)
    assert np.isfinite(force).all()


def test_two_body_equilibrium():
    # mass 2 each: repulsion 2*2*2/d balances attraction d plus gravity 1*2, so d^2 + 2d - 8 = 0
    emb = force_atlas2(Graph([(1, 2)]), LayoutParams(max_iterations=2000))
    d = float(np.linalg.norm(emb.positions[0] - emb.positions[1]))
    assert d == pytest.approx(2.0, rel=0.01)
    assert emb.iterations < 2000
    h = emb.history
    assert abs(h[-1] - h[-2]) < LayoutParams().epsilon


def test_disconnected_pair_moves_apart():
    g = Graph([], nodes=[1, 2])
    dists = []
    for k in range(1, 11):
        emb = force_atlas2(g, LayoutParams(gravity=0.0, max_iterations=k))
        dists.append(float(np.linalg.norm(emb.positions[0] - emb.positions[1])))
    assert all(b > a for a, b in zip(dists, dists[1:]))


def test_star_leaves_equidistant():
    g = Graph([(0, i) for i in range(1, 9)])
    for seed in range(5):
        emb = force_atlas2(g, LayoutParams(seed=seed))
        r = np.linalg.norm(emb.positions[1:] - emb.positions[0], axis=1)
        assert r.std() / r.mean() < 0.1


def test_deterministic_given_seed():
    rng = random.Random(3)
    g = Graph(random_graph(rng, 80, 0.05, connected=True))
    a = force_atlas2(g, LayoutParams(seed=42, max_iterations=200))
    b = force_atlas2(g, LayoutParams(seed=42, max_iterations=200))
    c = force_atlas2(g, LayoutParams(seed=43, max_iterations=200))
    assert np.array_equal(a.positions, b.positions)
    assert not np.array_equal(a.positions, c.positions)


def test_displacement_tail_is_monotone():
    rng = random.Random(8)
    g = Graph(random_graph(rng, 150, 0.03, connected=True))
    emb = force_atlas2(g, LayoutParams(seed=1, max_iterations=800))
    assert np.isfinite(emb.positions).all()
    tail = emb.history[-max(3, len(emb.history) // 20):]
    assert all(b <= a for a, b in zip(tail, tail[1:]))


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 25), st.integers(0, 2**32 - 1), st.booleans(), st.booleans())
def test_positions_always_finite(n, seed, lin_log, strong):
    g = Graph(random_graph(random.Random(seed), n, 0.2), nodes=range(n))
    emb = force_atlas2(g, LayoutParams(seed=seed, max_iterations=60, lin_log=lin_log, strong_gravity=strong))
    assert emb.positions.shape == (n, 2)
    assert np.isfinite(emb.positions).all()


@pytest.mark.parametrize("kw", [
    {"barnes_hut_theta": 1.2}, {"barnes_hut_theta": 0.0}, {"scaling": 0.0}, {"gravity": -1.0},
    {"max_iterations": 0}, {"epsilon": 0.0}, {"settle_factor": 0.5},
])
def test_invalid_params(kw):
    with pytest.raises(ValueError):
        LayoutParams(**kw)


def test_embedding_csv():
    emb = force_atlas2(Graph([(5, 7)]), LayoutParams(max_iterations=10))
    buf = io.StringIO()
    write_embedding_csv(emb, buf)
    rows = buf.getvalue().splitlines()
    assert rows[0] == "asn,x,y" and rows[1].startswith("5,")
    assert float(rows[2].split(",")[1]) == emb.positions[1, 0]


def test_svg_colours_and_structure():
    g = Graph([(1, 2), (2, 3)], country={1: "GB", 2: "GB", 3: "FR"})
    emb = force_atlas2(g, LayoutParams(max_iterations=50))
    svg = render_svg(g, emb)
    root = ET.fromstring(svg)
    ns = {"s": "http://www.w3.org/2000/svg"}
    circles = root.findall(".//s:circle", ns)
    assert len(circles) == len(g)
    assert len({c.get("fill") for c in circles}) == 2
    assert len(root.findall(".//s:line", ns)) == g.edge_count


def test_svg_radii():
    assert len(set(node_radii(np.array([0.3, 0.3, 0.3]), 3, Styling()))) == 1
    radii = node_radii(np.array([0.0, 1.0]), 2, Styling())
    assert radii[0] == Styling().min_radius and radii[1] == Styling().max_radius


def test_svg_mismatch():
    g = Graph([(1, 2)])
    emb = force_atlas2(Graph([(1, 3)]), LayoutParams(max_iterations=5))
    with pytest.raises(EmbeddingMismatch):
        render_svg(g, emb)


def test_country_colours_injective_within_palette():
    codes = [f"X{chr(65 + i)}" for i in range(26)] + ["GB", "FR", "DE", "ZZ"]
    colours = country_colours(codes)
    assert colours["ZZ"] == UNKNOWN_COLOUR
    named = [colours[c] for c in codes if c != "ZZ"]
    assert len(set(named)) == len(named) <= len(PALETTE)
    assert country_colours(list(reversed(codes))) == colours
