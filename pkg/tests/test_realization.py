import numpy as np
import pytest

from selfaffine.errors import ConfigurationError, ResourceLimitError
from selfaffine.heightlaw import (
    CustomSampler,
    Deterministic,
    IidUniform,
    MirroredBeta,
    okamoto_law,
)
from selfaffine.realization import (
    GraphApprox,
    SvgOptions,
    export_csv,
    export_json,
    graph_points,
    iter_levels,
    render_svg,
    sample_tree,
)
from selfaffine.symbolic import Partition, level_widths

P25 = Partition((0.0, 0.4, 0.6, 1.0))
THIRDS = Partition.thirds()


def test_tree_shape_and_root():
    tree = sample_tree(P25, MirroredBeta(2.0, 1.0), 4, seed=0)
    assert tree.depth == 4
    assert tree.node_count == 1 + 3 + 9 + 27 + 81
    u0, w0 = tree.level(0)
    assert u0[0] == 0.0 and w0[0] == 1.0
    for k in range(5):
        u, w = tree.level(k)
        assert u.shape == w.shape == (3**k,)


def test_tree_determinism_and_seed_sensitivity():
    a = sample_tree(P25, MirroredBeta(2.0, 1.0), 5, seed=11)
    b = sample_tree(P25, MirroredBeta(2.0, 1.0), 5, seed=11)
    c = sample_tree(P25, MirroredBeta(2.0, 1.0), 5, seed=12)
    for k in range(6):
        np.testing.assert_array_equal(a.level(k)[0], b.level(k)[0])
        np.testing.assert_array_equal(a.level(k)[1], b.level(k)[1])
    assert not np.array_equal(a.level(3)[0], c.level(3)[0])


def test_sibling_continuity_and_terminal_values():
    # child interval chains must agree exactly at shared breakpoints
    tree = sample_tree(THIRDS, IidUniform(3), 6, seed=3)
    for k in range(1, 7):
        u, w = tree.level(k)
        np.testing.assert_array_equal(w[:-1], u[1:])
    u, w = tree.level(6)
    assert u[0] == 0.0 and w[-1] == 1.0


def test_heights_are_interval_lengths():
    tree = sample_tree(P25, MirroredBeta(2.0, 1.0), 3, seed=5)
    u, w = tree.level(2)
    np.testing.assert_allclose(tree.heights(2), np.abs(w - u))
    # root height is 1
    assert tree.heights(0)[0] == 1.0


def test_height_recursion_multiplicative():
    tree = sample_tree(THIRDS, okamoto_law(5 / 6), 5, seed=0)
    for k in range(5):
        h = tree.heights(k)
        hch = tree.heights(k + 1).reshape(-1, 3)
        ratios = hch / h[:, None]
        # deterministic law: ratios must equal (5/6, 2/3, 5/6) everywhere
        np.testing.assert_allclose(ratios, np.tile([5 / 6, 2 / 3, 5 / 6], (3**k, 1)), rtol=1e-12)


def test_iter_levels_matches_tree():
    tree = sample_tree(P25, MirroredBeta(2.0, 1.0), 4, seed=9)
    for k, u, w in iter_levels(P25, MirroredBeta(2.0, 1.0), 4, seed=9):
        np.testing.assert_array_equal(u, tree.level(k)[0])
        np.testing.assert_array_equal(w, tree.level(k)[1])


def test_traversal_independence_of_levels():
    # levels of a shallow tree are exactly the prefix of a deeper one
    shallow = sample_tree(P25, MirroredBeta(2.0, 1.0), 3, seed=21)
    deep = sample_tree(P25, MirroredBeta(2.0, 1.0), 6, seed=21)
    for k in range(4):
        np.testing.assert_array_equal(shallow.level(k)[0], deep.level(k)[0])
        np.testing.assert_array_equal(shallow.level(k)[1], deep.level(k)[1])


def test_custom_sampler_slow_path():
    law = CustomSampler(3, lambda rng: np.sort(rng.random(2)))
    tree = sample_tree(THIRDS, law, 3, seed=2)
    rep = sample_tree(THIRDS, law, 3, seed=2)
    for k in range(4):
        np.testing.assert_array_equal(tree.level(k)[0], rep.level(k)[0])
    u, w = tree.level(3)
    np.testing.assert_array_equal(w[:-1], u[1:])


def test_budget_errors():
    with pytest.raises(ResourceLimitError):
        sample_tree(THIRDS, IidUniform(3), 33, seed=0)
    with pytest.raises(ResourceLimitError):
        sample_tree(Partition.uniform(10), IidUniform(10), 9, seed=0)
    with pytest.raises(ValueError):
        sample_tree(THIRDS, IidUniform(3), -1, seed=0)


def test_invalid_law_rejected_at_sampling():
    with pytest.raises(ConfigurationError):
        sample_tree(THIRDS, Deterministic((1 / 3, 2 / 3)), 2, seed=0)


def test_graph_points_contract():
    tree = sample_tree(P25, MirroredBeta(2.0, 1.0), 5, seed=1)
    g = graph_points(tree)
    assert g.x[0] == 0.0 and g.x[-1] == 1.0
    assert g.y[0] == 0.0 and g.y[-1] == 1.0
    assert np.all(np.diff(g.x) > 0)
    assert g.x.size == 3**5 + 1
    # rectangles partition [0, 1] horizontally
    x0, x1, y0, y1 = g.rects
    assert x0[0] == 0.0 and x1[-1] == 1.0
    np.testing.assert_allclose(x1[:-1], x0[1:], atol=1e-15)
    np.testing.assert_allclose(x1 - x0, level_widths(P25, 5), rtol=1e-12)
    assert np.all(y1 >= y0)


def test_graph_level_selection():
    tree = sample_tree(THIRDS, IidUniform(3), 4, seed=8)
    g1 = graph_points(tree, 1)
    assert g1.level == 1 and g1.x.size == 4


def test_depth_zero_two_point_graph():
    tree = sample_tree(THIRDS, IidUniform(3), 0, seed=0)
    g = graph_points(tree)
    np.testing.assert_array_equal(g.x, [0.0, 1.0])
    np.testing.assert_array_equal(g.y, [0.0, 1.0])


def test_export_csv_json():
    tree = sample_tree(THIRDS, IidUniform(3), 1, seed=4)
    g = graph_points(tree)
    csv = export_csv(g)
    lines = csv.strip().split("\n")
    assert lines[0] == "x,y"
    assert len(lines) == 5
    assert lines[1] == "0.0,0.0"
    import json

    pts = json.loads(export_json(g))
    assert pts[0] == [0.0, 0.0] and pts[-1] == [1.0, 1.0]
    # repr round-trip: parsing the csv reproduces the exact floats
    x, y = map(float, lines[2].split(","))
    assert x == g.x[1] and y == g.y[1]


def test_svg_deterministic_and_structured():
    tree = sample_tree(THIRDS, okamoto_law(5 / 6), 1, seed=0)
    g = graph_points(tree)
    svg1 = render_svg(g, SvgOptions(show_rectangles=True))
    svg2 = render_svg(g, SvgOptions(show_rectangles=True))
    assert svg1 == svg2
    assert svg1.startswith("<svg ") and svg1.rstrip().endswith("</svg>")
    assert svg1.count("<rect ") == 1 + 3  # background + three level-1 cells
    assert svg1.count("<line ") == 3  # one diagonal per cell
    assert svg1.count("<polyline ") == 1


def test_svg_no_rectangles_by_default():
    tree = sample_tree(THIRDS, IidUniform(3), 2, seed=0)
    svg = render_svg(graph_points(tree))
    assert svg.count("<rect ") == 1  # background only
