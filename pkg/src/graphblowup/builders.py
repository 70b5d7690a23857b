"""Constructors for lattices, cyclic-group powers, product graphs and edge lists."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, NamedTuple, Union

import numpy as np
import scipy.sparse as sp

from .graph import Graph, GraphError, laplacian_field
from .metrics import EuclideanLatticeMetric, NaturalMetric, ProductMetric, PseudoMetric


class Lattice(NamedTuple):
    graph: Graph
    euclidean: EuclideanLatticeMetric
    natural: NaturalMetric


class Product(NamedTuple):
    graph: Graph
    metric: ProductMetric
    left: tuple
    right: tuple


@dataclass(frozen=True)
class LatticeSpec:
    dimension: int
    window_radius: int

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("lattice dimension must be >= 1")
        if self.window_radius < 1:
            raise ValueError("window radius must be >= 1")


MeasureRule = Union[str, Callable[[np.ndarray, np.ndarray], np.ndarray]]

_MEASURE_RULES = {
    "sum": lambda m1, m2: m1 + m2,
    "max": np.maximum,
    "product": lambda m1, m2: m1 * m2,
}


@dataclass(frozen=True)
class ProductSpec:
    """Two factors ``(graph, metric)``, exponent ``p`` and a measure rule.

    ``measure_rule`` is ``"sum"``, ``"max"``, ``"product"`` or a callable
    ``(mu1, mu2) -> mu`` on broadcast arrays. When ``measure_constant`` is
    given the product measure must dominate ``C * max(mu1, mu2)``.
    """

    left: tuple
    right: tuple
    p: float = 2.0
    measure_rule: MeasureRule = "sum"
    measure_constant: float | None = None

    def __post_init__(self):
        if not 1 <= self.p <= 2:
            raise ValueError(f"p={self.p} must lie in [1, 2]")


def _grid_indices(shape):
    return np.arange(int(np.prod(shape))).reshape(shape)


def lattice(spec: LatticeSpec | int, window_radius: int | None = None) -> Lattice:
    """Window ``{|x|_inf <= radius}`` of the integer lattice ``Z^N``.

    Unit weights between nearest neighbours and ``mu = 2N`` everywhere.
    Vertices on the sup-norm sphere of the window are flagged as boundary.
    """
    if not isinstance(spec, LatticeSpec):
        spec = LatticeSpec(int(spec), int(window_radius))
    N, r = spec.dimension, spec.window_radius
    side = 2 * r + 1
    shape = (side,) * N
    idx = _grid_indices(shape)
    coords = np.stack(np.unravel_index(idx.ravel(), shape), axis=1) - r

    rows, cols = [], []
    for axis in range(N):
        a = np.take(idx, range(side - 1), axis=axis).ravel()
        b = np.take(idx, range(1, side), axis=axis).ravel()
        rows += [a, b]
        cols += [b, a]
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    n = side ** N
    W = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))

    boundary = np.abs(coords).max(axis=1) == r
    missing = 2 * N - np.asarray(W.sum(axis=1)).ravel()
    ids = [tuple(c) for c in coords.tolist()]
    g = Graph(ids, np.full(n, 2.0 * N), W, boundary=boundary, missing_weight=missing,
              coords=coords, name=f"Z^{N}[r={r}]")
    return Lattice(g, EuclideanLatticeMetric(g), NaturalMetric(g))


def cycle(m: int) -> Graph:
    """The cyclic group ``Z_m`` with ``omega([a],[a±1]) = 1`` and ``mu = 2``.

    For ``m = 2`` both ``[a]+[1]`` and ``[a]-[1]`` name the same vertex, so the
    pairing collapses to one edge of weight 2.
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    W = sp.lil_matrix((m, m))
    for a in range(m):
        for b in ((a + 1) % m, (a - 1) % m):
            W[a, b] += 1.0
    return Graph([(a,) for a in range(m)], np.full(m, 2.0), W.tocsr(),
                 coords=np.arange(m)[:, None], name=f"Z_{m}")


def product_graph(g1: Graph, g2: Graph, measure_rule: MeasureRule = "sum",
                  measure_constant: float | None = None) -> Graph:
    """Cartesian product: edges move in exactly one factor."""
    n1, n2 = g1.n, g2.n
    W = sp.kron(g1.weights, sp.identity(n2)) + sp.kron(sp.identity(n1), g2.weights)
    rule = _MEASURE_RULES[measure_rule] if isinstance(measure_rule, str) else measure_rule
    m1 = np.repeat(g1.mu, n2)
    m2 = np.tile(g2.mu, n1)
    mu = np.asarray(rule(m1, m2), dtype=float)
    if mu.shape != (n1 * n2,) or np.any(~(mu > 0)):
        raise GraphError("product measure must be positive on every vertex")
    ratio = float((mu / np.maximum(m1, m2)).min())
    if measure_constant is not None and ratio < measure_constant * (1 - 1e-12):
        raise GraphError(f"product measure violates mu >= C max(mu1, mu2) "
                         f"with C={measure_constant} (observed {ratio:.6g})")
    truncated = g1.truncated or g2.truncated
    boundary = np.repeat(g1.boundary, n2) | np.tile(g2.boundary, n1)
    missing = np.repeat(g1.missing_weight, n2) + np.tile(g2.missing_weight, n1)
    coords = None
    if g1.coords is not None and g2.coords is not None:
        coords = np.hstack([np.repeat(g1.coords, n2, axis=0), np.tile(g2.coords, (n1, 1))])
    ids = [(a, b) for a in g1.ids for b in g2.ids]
    return Graph(ids, mu, W, boundary=boundary if truncated else None,
                 missing_weight=missing, coords=coords, name=f"{g1.name}x{g2.name}")


def product(spec: ProductSpec) -> Product:
    (g1, d1), (g2, d2) = spec.left, spec.right
    g = product_graph(g1, g2, spec.measure_rule, spec.measure_constant)
    return Product(g, ProductMetric(g, d1, d2, spec.p), spec.left, spec.right)


def cyclic_power(m: int, K: int, measure_rule: MeasureRule = "sum") -> tuple[Graph, NaturalMetric]:
    """``(Z_m)^K`` as an iterated product, with the natural distance."""
    if K < 1:
        raise ValueError("K must be >= 1")
    g = cycle(m)
    for _ in range(K - 1):
        g = product_graph(g, cycle(m), measure_rule)
    g = Graph([_flatten(v) for v in g.ids], g.mu, g.weights, coords=g.coords,
              name=f"(Z_{m})^{K}")
    return g, NaturalMetric(g)


def _flatten(v):
    if isinstance(v, tuple):
        return tuple(itertools.chain.from_iterable(
            _flatten(x) if isinstance(x, tuple) else (x,) for x in v))
    return (v,)


def product_factorization_residual(prod: Product, w=None) -> float:
    """Largest relative defect of the product Laplacian splitting for ``d^p``.

    Compares ``Delta_V d^p`` with ``(mu2/mu) Delta_2 d2^p + (mu1/mu) Delta_1 d1^p``
    at every interior vertex, centred at ``w`` (default: vertex 0 of each factor).
    """
    g, metric = prod.graph, prod.metric
    (g1, d1), (g2, d2) = prod.left, prod.right
    p = metric.p
    if w is None:
        w1 = g1.vertex((0,) * g1.coords.shape[1]) if g1.coords is not None else 0
        w2 = 0
    else:
        w1, w2 = g1.vertex(w[0]), g2.vertex(w[1])
    lhs = laplacian_field(g, metric.powered_from_index(w1 * g2.n + w2, p))
    lap1 = laplacian_field(g1, d1.powered_from_index(w1, p))
    lap2 = laplacian_field(g2, d2.powered_from_index(w2, p))
    m1 = np.repeat(g1.mu, g2.n)
    m2 = np.tile(g2.mu, g1.n)
    rhs = m2 / g.mu * np.tile(lap2, g1.n) + m1 / g.mu * np.repeat(lap1, g2.n)
    mask = g.interior
    scale = np.maximum(np.abs(lhs[mask]), 1.0)
    return float((np.abs(lhs[mask] - rhs[mask]) / scale).max())


# --- edge-list files ---------------------------------------------------------

class EdgeListError(ValueError):
    pass


def from_edge_list(path) -> Graph:
    """Load ``x y w`` edge lines and ``node x mu`` measure lines.

    An optional ``boundary x`` line marks ``x`` as cut by a truncation
    window. Each undirected edge may be listed once or in both directions;
    listing both with different weights is a symmetry error.
    """
    path = Path(path)
    edges: dict[tuple[str, str], float] = {}
    mu: dict[str, float] = {}
    boundary: set[str] = set()
    order: dict[str, None] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        where = f"{path}:{lineno}"
        if parts[0] == "node":
            if len(parts) != 3:
                raise EdgeListError(f"{where}: expected 'node x mu'")
            mu[parts[1]] = _number(parts[2], where)
            order.setdefault(parts[1])
        elif parts[0] == "boundary":
            if len(parts) != 2:
                raise EdgeListError(f"{where}: expected 'boundary x'")
            boundary.add(parts[1])
        else:
            if len(parts) != 3:
                raise EdgeListError(f"{where}: expected 'x y w', got {raw!r}")
            x, y, w = parts[0], parts[1], _number(parts[2], where)
            if x == y:
                raise GraphError(f"{where}: loop at vertex {x!r}")
            if (x, y) in edges and edges[x, y] != w:
                raise GraphError(f"{where}: asymmetric weights for {x!r} {y!r}")
            edges[x, y] = w
            order.setdefault(x)
            order.setdefault(y)
    for (x, y), w in edges.items():
        if (y, x) in edges and edges[y, x] != w:
            raise GraphError(f"asymmetric weights for {x!r} {y!r}")
    ids = list(order)
    missing = [v for v in ids if v not in mu]
    if missing:
        raise GraphError(f"missing node measure for vertex {missing[0]!r}")
    unknown = boundary - set(ids)
    if unknown:
        raise EdgeListError(f"boundary flag for unknown vertex {sorted(unknown)[0]!r}")
    index = {v: i for i, v in enumerate(ids)}
    n = len(ids)
    W = sp.lil_matrix((n, n))
    for (x, y), w in edges.items():
        W[index[x], index[y]] = w
        W[index[y], index[x]] = w
    flags = np.array([v in boundary for v in ids]) if boundary else None
    return Graph(ids, [mu[v] for v in ids], W.tocsr(), boundary=flags, name=path.stem)


def _number(text, where):
    try:
        return float(text)
    except ValueError:
        raise EdgeListError(f"{where}: not a number: {text!r}") from None


def vertex_label(v) -> str:
    if isinstance(v, tuple):
        return ",".join(vertex_label(x) for x in v)
    return str(v)


def to_edge_list(g: Graph) -> str:
    """Serialise ``g`` in the edge-list format read by :func:`from_edge_list`."""
    labels = [vertex_label(v) for v in g.ids]
    lines = [f"# {g.name}: {g.n} vertices, {g.num_edges} edges"]
    lines += [f"node {labels[i]} {float(g.mu[i])!r}" for i in range(g.n)]
    if g.truncated:
        lines += [f"boundary {labels[i]}" for i in np.flatnonzero(g.boundary)]
    lines += [f"{labels[i]} {labels[j]} {float(w)!r}" for i, j, w in g.edges()]
    return "\n".join(lines) + "\n"


def metric_for(graph: Graph, kind: str) -> PseudoMetric:
    if kind == "natural":
        return NaturalMetric(graph)
    if kind in ("euclidean", "euclidean-lattice"):
        return EuclideanLatticeMetric(graph)
    raise ValueError(f"unknown metric kind {kind!r}")
