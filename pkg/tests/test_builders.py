import itertools

import numpy as np
import pytest
import scipy.sparse as sp

from graphblowup import (Graph, GraphError, LatticeSpec, ProductSpec, cycle, cyclic_power,
                         from_edge_list, lattice, product, to_edge_list)
from graphblowup.builders import EdgeListError, product_factorization_residual, product_graph
from graphblowup.hypothesis import edge_mass_bound


def test_lattice_examples():
    lat = lattice(LatticeSpec(1, 2))
    g = lat.graph
    assert g.n == 5
    assert np.all(g.mu == 2.0)
    assert np.all(g.degree[g.interior] == 2.0)
    z2 = lattice(2, 1).graph
    assert z2.n == 9
    assert z2.degree[z2.vertex((0, 0))] == 4.0


@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_lattice_edge_mass_ratio_is_one(N):
    g = lattice(N, 3).graph
    assert edge_mass_bound(g) == 1.0
    np.testing.assert_array_equal(g.degree + g.missing_weight, g.mu)


def test_lattice_adjacency_matches_coordinate_rule():
    g = lattice(2, 3).graph
    c = g.coords
    for i, j, w in g.edges():
        assert w == 1.0 and np.abs(c[i] - c[j]).sum() == 1
    assert g.num_edges == 2 * 7 * 6


def test_lattice_boundary_is_sup_norm_sphere():
    g = lattice(2, 4).graph
    for v, b in zip(g.ids, g.boundary):
        assert b == (max(abs(x) for x in v) == 4)


def test_lattice_spec_validation():
    with pytest.raises(ValueError):
        LatticeSpec(0, 3)
    with pytest.raises(ValueError):
        LatticeSpec(2, 0)


def test_cyclic_power_examples():
    g, d = cyclic_power(5, 1)
    assert g.n == 5 and np.all(g.degree == 2) and np.all(g.mu == 2)
    g2, _ = cyclic_power(2, 1)
    assert g2.n == 2 and g2.num_edges == 1
    assert g2.weights[0, 1] == 2.0 and np.all(g2.mu == 2.0)
    g3, _ = cyclic_power(3, 2)
    assert g3.n == 9 and np.all(g3.degree == 4)
    assert not g3.truncated


@pytest.mark.parametrize("m,K", [(3, 1), (3, 2), (4, 2), (5, 2), (3, 3)])
def test_cyclic_power_counts(m, K):
    g, _ = cyclic_power(m, K)
    assert g.n == m ** K
    assert g.num_edges == K * m ** K
    assert edge_mass_bound(g) == 1.0


def test_product_of_two_edges_is_four_cycle():
    edge = Graph(["a", "b"], [1.0, 1.0], sp.csr_matrix(np.array([[0, 1.0], [1.0, 0]])))
    g = product_graph(edge, edge)
    assert g.n == 4 and g.num_edges == 4
    assert np.all(g.degree == 2)
    # a 4-cycle: every vertex has exactly one vertex at hop distance 2
    A = (g.weights.toarray() > 0).astype(int)
    two = (A @ A > 0) & (A == 0) & ~np.eye(4, dtype=bool)
    assert np.all(two.sum(axis=1) == 1)


def test_product_vertex_count_and_metric():
    lat = lattice(1, 6)
    right = cyclic_power(5, 1)
    prod = product(ProductSpec((lat.graph, lat.euclidean), right, p=1.5))
    assert prod.graph.n == lat.graph.n * 5
    i = prod.graph.vertex(((2,), (0,)))
    j = prod.graph.vertex(((-1,), (3,)))
    d = prod.metric.from_index(i)[j]
    assert d == pytest.approx((3 ** 1.5 + 2 ** 1.5) ** (1 / 1.5), rel=1e-14)


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0])
@pytest.mark.parametrize("rule", ["sum", "max", "product"])
def test_product_factorization(p, rule):
    lat = lattice(1, 12)
    prod = product(ProductSpec((lat.graph, lat.euclidean), cyclic_power(5, 1), p, rule))
    assert product_factorization_residual(prod) <= 1e-12
    assert product_factorization_residual(prod, w=((3,), (2,))) <= 1e-12


def test_product_measure_rule_lower_bound():
    lat = lattice(1, 3)
    right = cyclic_power(3, 1)
    product(ProductSpec((lat.graph, lat.euclidean), right, measure_rule="max",
                        measure_constant=1.0))
    with pytest.raises(GraphError, match="violates"):
        product(ProductSpec((lat.graph, lat.euclidean), right,
                            measure_rule=lambda a, b: 0.1 * np.maximum(a, b), measure_constant=0.5))
    with pytest.raises(ValueError):
        ProductSpec((lat.graph, lat.euclidean), right, p=3.0)


def test_edge_list_triangle(tmp_path):
    f = tmp_path / "tri.edges"
    f.write_text("# triangle\nnode a 2\nnode b 2\nnode c 2\na b 1\nb c 1\nc a 1\n")
    g = from_edge_list(f)
    assert g.n == 3 and g.num_edges == 3
    assert sorted(g.neighbors("a")) == ["b", "c"]


@pytest.mark.parametrize("text,err,match", [
    ("node x 1\nx x 1\n", GraphError, "loop"),
    ("node x 1\nx y 1\n", GraphError, "missing node measure"),
    ("node x 1\nnode y 1\nx y 1\ny x 2\n", GraphError, "asymmetric"),
    ("node x 1\nnode y 0\nx y 1\n", GraphError, "positive"),
    ("node x 1\nnode y 1\nnode z 1\nx y 1\n", GraphError, "disconnected"),
    ("node x 1\nnode y 1\nx y one\n", EdgeListError, "not a number"),
    ("node x 1\nnode y 1\nx y\n", EdgeListError, "expected"),
])
def test_edge_list_errors(tmp_path, text, err, match):
    f = tmp_path / "bad.edges"
    f.write_text(text)
    with pytest.raises(err, match=match):
        from_edge_list(f)


def test_edge_list_round_trip(tmp_path):
    for g in (lattice(2, 3).graph, cyclic_power(3, 2)[0]):
        f = tmp_path / "g.edges"
        f.write_text(to_edge_list(g))
        h = from_edge_list(f)
        assert h.n == g.n and h.num_edges == g.num_edges
        assert h.truncated == g.truncated
        assert np.array_equal(h.boundary, g.boundary)
        np.testing.assert_array_equal(h.mu, g.mu)
        np.testing.assert_array_equal(h.weights.toarray(), g.weights.toarray())


def test_cycle_rejects_small_m():
    with pytest.raises(ValueError):
        cycle(1)
    for m in (3, 6):
        g = cycle(m)
        for a, b in itertools.combinations(range(m), 2):
            adjacent = (b - a) % m in (1, m - 1)
            assert (g.weights[a, b] > 0) == adjacent
