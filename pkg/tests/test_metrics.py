from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _graphs import random_graph
from graphblowup import (Ball, EuclideanLatticeMetric, NaturalMetric, ProductSpec, TableMetric,
                         WindowTooSmall, ball, cycle, cyclic_power, jump_size, lattice,
                         natural_distance, product, volume)
from graphblowup.metrics import (MetricError, ball_indices, load_metric_table, max_safe_radius,
                                 triangle_violations)


def bfs(g, source):
    """Textbook breadth-first search over the adjacency lists."""
    dist = {source: 0}
    queue = deque([source])
    while queue:
        x = queue.popleft()
        for y in g.neighbors(x):
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    return dist


def test_natural_distance_examples():
    z2 = lattice(2, 5).graph
    assert natural_distance(z2, (0, 0), (0, 0)) == 0
    assert natural_distance(z2, (0, 0), (2, 3)) == 5
    assert natural_distance(cycle(5), (0,), (3,)) == 2


def test_natural_distance_matches_bfs():
    g = random_graph(40, seed=11, extra=15)
    d = NaturalMetric(g)
    for s in (0, 7, 23):
        oracle = bfs(g, s)
        assert all(d(s, y) == oracle[y] for y in g.ids)


def test_jump_sizes():
    g = random_graph(30, seed=2)
    assert jump_size(g, NaturalMetric(g)) == 1.0
    for N in (1, 2, 3):
        lat = lattice(N, 4)
        assert jump_size(lat.graph, lat.euclidean) == 1.0
    lat = lattice(1, 10)
    for p in (1.0, 1.5, 2.0):
        prod = product(ProductSpec((lat.graph, lat.euclidean), cyclic_power(5, 1), p))
        assert prod.metric.jump <= max(lat.euclidean.jump, 1.0)
    with pytest.raises(MetricError):
        jump_size(lat.graph, NaturalMetric(g))


def test_ball_examples():
    lat = lattice(1, 10)
    b = ball(lat.graph, lat.natural, (0,), 2)
    assert b.members == {(-2,), (-1,), (0,), (1,), (2,)}
    assert volume(lat.graph, b) == 10.0
    z2 = lattice(2, 5)
    assert len(ball(z2.graph, z2.euclidean, (0, 0), 1.5)) == 9
    assert ball(z2.graph, z2.euclidean, (0, 0), 0).members == {(0, 0)}
    assert volume(z2.graph, []) == 0.0


def test_zero_radius_ball_includes_zero_distance_points():
    g = cycle(4)
    table = np.array([[0, 0, 1, 1], [0, 0, 1, 1], [1, 1, 0, 0], [1, 1, 0, 0]], float)
    d = TableMetric(g, table)
    assert ball(g, d, (0,), 0).members == {(0,), (1,)}


def test_ball_reaching_boundary_raises():
    lat = lattice(2, 5)
    with pytest.raises(WindowTooSmall):
        ball(lat.graph, lat.euclidean, (0, 0), 5)
    assert max_safe_radius(lat.euclidean, lat.graph.vertex((0, 0))) == 5.0
    ball(lat.graph, lat.euclidean, (0, 0), 4.99)


def test_lattice_volume_growth_bounded():
    lat = lattice(2, 60)
    i0 = lat.graph.vertex((0, 0))
    for R in (2, 5, 10, 20, 40):
        vol = lat.graph.mu[ball_indices(lat.euclidean, i0, R)].sum()
        assert vol <= 4 * np.pi * (R + 1) ** 2


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 5000), r1=st.floats(0, 6), r2=st.floats(0, 6))
def test_balls_monotone_and_volume_additive(seed, r1, r2):
    g = random_graph(30, seed=seed, extra=5)
    d = NaturalMetric(g)
    lo, hi = sorted((r1, r2))
    small, big = ball(g, d, 0, lo), ball(g, d, 0, hi)
    assert small.members <= big.members
    ring = big.members - small.members
    assert volume(g, big) == pytest.approx(volume(g, small) + volume(g, ring), rel=1e-12)
    assert volume(g, small) <= volume(g, big)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 5000))
def test_natural_metric_axioms(seed):
    g = random_graph(25, seed=seed, extra=10)
    D = np.array([NaturalMetric(g).from_index(i) for i in range(g.n)])
    assert np.all(np.diag(D) == 0)
    assert np.array_equal(D, D.T)
    assert triangle_violations(D, exhaustive=True) == 0


@settings(max_examples=10, deadline=None)
@given(p=st.floats(1.0, 2.0), seed=st.integers(0, 1000))
def test_product_metric_triangle_inequality(p, seed):
    lat = lattice(1, 4)
    prod = product(ProductSpec((lat.graph, lat.euclidean), cyclic_power(4, 1), p))
    D = np.array([prod.metric.from_index(i) for i in range(prod.graph.n)])
    assert np.allclose(D, D.T)
    assert triangle_violations(D, samples=5000, seed=seed, tol=1e-12) == 0


def test_euclidean_squares_are_exact_integers():
    lat = lattice(3, 4)
    sq = lat.euclidean.powered_from_index(lat.graph.vertex((0, 0, 0)), 2)
    c = lat.graph.coords
    assert np.array_equal(sq, (c ** 2).sum(axis=1).astype(float))


def test_table_metric_validation():
    g = cycle(3)
    good = np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]], float)
    assert TableMetric(g, good).jump == 1.0
    with pytest.raises(MetricError, match="triangle"):
        TableMetric(g, np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], float))
    with pytest.raises(MetricError, match="symmetric"):
        TableMetric(g, np.array([[0, 1, 1], [2, 0, 1], [1, 1, 0]], float))
    with pytest.raises(MetricError, match="diagonal"):
        TableMetric(g, np.eye(3))


def test_triangle_sampling_is_seeded():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(300, 2))
    D = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
    D[3, 4:] = D[4:, 3] = 50.0
    a = triangle_violations(D, samples=20000, seed=5)
    assert a == triangle_violations(D, samples=20000, seed=5)
    assert a > 0


def test_load_metric_table(tmp_path):
    from graphblowup.builders import from_edge_list
    edges = tmp_path / "g.edges"
    edges.write_text("node a 1\nnode b 1\nnode c 1\na b 1\nb c 1\n")
    g = from_edge_list(edges)
    table = tmp_path / "d.txt"
    table.write_text("# x y d\na b 1\nb c 1\nc a 2\n")
    d = load_metric_table(table, g)
    assert d("c", "a") == 2.0 and d("a", "c") == 2.0
    table.write_text("a b 1\nb c 1\n")
    with pytest.raises(MetricError, match="missing"):
        load_metric_table(table, g)
    table.write_text("a b 1\nb a 2\nb c 1\na c 2\n")
    with pytest.raises(MetricError, match="conflicting"):
        load_metric_table(table, g)


def test_euclidean_needs_coordinates():
    with pytest.raises(MetricError):
        EuclideanLatticeMetric(random_graph(4))


def test_ball_dataclass_contains():
    b = Ball("x", 1.0, frozenset({"x", "y"}))
    assert "y" in b and len(b) == 2
