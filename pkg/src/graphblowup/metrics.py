"""Pseudo-metrics on weighted graphs, jump size, balls and volumes."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .graph import Graph


class WindowTooSmall(ValueError):
    """A ball or region reaches the truncation boundary of the window."""


class MetricError(ValueError):
    pass


class PseudoMetric:
    """Symmetric, zero-diagonal distance on the vertices of ``graph``.

    Subclasses provide :meth:`from_index`, the vector of distances from
    one vertex to every vertex of the window. The jump size is computed
    eagerly from the stored edges.
    """

    kind = "abstract"

    def __init__(self, graph: Graph):
        self.graph = graph
        self._jump = None

    def __repr__(self):
        return f"{type(self).__name__}({self.graph.name!r})"

    def from_index(self, i: int) -> np.ndarray:
        raise NotImplementedError

    def powered_from_index(self, i: int, q: float) -> np.ndarray:
        """``d(x_i, .)**q``; subclasses override where an exact form exists."""
        return self.from_index(i) ** q

    def from_vertex(self, x) -> np.ndarray:
        return self.from_index(self.graph.vertex(x))

    def __call__(self, x, y) -> float:
        return float(self.from_vertex(x)[self.graph.vertex(y)])

    def edge_distances(self) -> np.ndarray:
        """Distance across every undirected edge (``i < j`` order)."""
        out = []
        for i, j, _ in self.graph.edges():
            out.append(self.from_index(i)[j])
        return np.asarray(out, dtype=float)

    @property
    def jump(self) -> float:
        """Largest distance across an edge of positive weight.

        On a truncated window this is the supremum over window edges only.
        """
        if self._jump is None:
            ed = self.edge_distances()
            self._jump = float(ed.max()) if ed.size else 0.0
        return self._jump

    @property
    def jump_window_restricted(self) -> bool:
        return self.graph.truncated


class NaturalMetric(PseudoMetric):
    """Hop distance: length of a shortest path."""

    kind = "natural"

    def __init__(self, graph: Graph):
        super().__init__(graph)
        self._jump = 1.0 if graph.num_edges else 0.0

    def from_index(self, i: int) -> np.ndarray:
        d = shortest_path(self.graph.weights, method="D", directed=False,
                          unweighted=True, indices=i)
        if not np.all(np.isfinite(d)):
            raise MetricError("vertex pair with no connecting path")
        return d

    def edge_distances(self) -> np.ndarray:
        return np.ones(self.graph.num_edges)


class EuclideanLatticeMetric(PseudoMetric):
    """Euclidean distance between integer coordinates."""

    kind = "euclidean-lattice"

    def __init__(self, graph: Graph):
        if graph.coords is None:
            raise MetricError("euclidean lattice metric needs vertex coordinates")
        super().__init__(graph)
        self._jump = float(self.edge_distances().max()) if graph.num_edges else 0.0

    def _squared(self, i: int) -> np.ndarray:
        diff = self.graph.coords - self.graph.coords[i]
        return np.einsum("ij,ij->i", diff, diff).astype(float)

    def from_index(self, i: int) -> np.ndarray:
        return np.sqrt(self._squared(i))

    def powered_from_index(self, i: int, q: float) -> np.ndarray:
        if q == 2:
            return self._squared(i)
        return self._squared(i) ** (q / 2)

    def edge_distances(self) -> np.ndarray:
        rows, cols, _ = self.graph.edge_arrays()
        keep = rows < cols
        c = self.graph.coords
        diff = c[cols[keep]] - c[rows[keep]]
        return np.sqrt(np.einsum("ij,ij->i", diff, diff).astype(float))


class ProductMetric(PseudoMetric):
    """``(d1**p + d2**p)**(1/p)`` on a product graph.

    Product vertex ``(i1, i2)`` has dense index ``i1 * n2 + i2``.
    """

    kind = "product"

    def __init__(self, graph: Graph, left: PseudoMetric, right: PseudoMetric, p: float):
        if not 1 <= p <= 2:
            raise MetricError(f"product exponent p={p} must lie in [1, 2]")
        if graph.n != left.graph.n * right.graph.n:
            raise MetricError("product graph size does not match factors")
        super().__init__(graph)
        self.left, self.right, self.p = left, right, float(p)

    def _split(self, i: int) -> tuple[int, int]:
        return divmod(i, self.right.graph.n)

    def powered_from_index(self, i: int, q: float) -> np.ndarray:
        i1, i2 = self._split(i)
        p = self.p
        s = (self.left.powered_from_index(i1, p)[:, None]
             + self.right.powered_from_index(i2, p)[None, :]).ravel()
        return s if q == p else s ** (q / p)

    def from_index(self, i: int) -> np.ndarray:
        return self.powered_from_index(i, 1.0)

    def edge_distances(self) -> np.ndarray:
        # Product edges move in one factor only, so d reduces to d1 or d2.
        rows, cols, _ = self.graph.edge_arrays()
        keep = rows < cols
        n2 = self.right.graph.n
        a1, a2 = np.divmod(rows[keep], n2)
        b1, b2 = np.divmod(cols[keep], n2)
        lookup = {}
        for factor, tag in ((self.left, 0), (self.right, 1)):
            pairs = list(factor.graph.edges())
            for (i, j, _), dij in zip(pairs, factor.edge_distances()):
                lookup[tag, i, j] = lookup[tag, j, i] = dij
        out = np.empty(a1.size)
        for k in range(a1.size):
            if a2[k] == b2[k]:
                out[k] = lookup[0, a1[k], b1[k]]
            else:
                out[k] = lookup[1, a2[k], b2[k]]
        return out

    @property
    def jump(self) -> float:
        if self._jump is None:
            # Every product edge is a factor edge, so j = max(j1, j2) exactly.
            self._jump = max(self.left.jump, self.right.jump)
        return self._jump


class TableMetric(PseudoMetric):
    """Pseudo-metric given by an explicit symmetric table.

    Zero off-diagonal entries are allowed. Triangle inequality is checked
    exhaustively below ``exhaustive_below`` vertices and on ``samples``
    random triples otherwise.
    """

    kind = "custom-table"

    def __init__(self, graph: Graph, table, samples: int = 10_000, seed: int = 0,
                 exhaustive_below: int = 200, tol: float = 1e-12):
        D = np.asarray(table, dtype=float)
        n = graph.n
        if D.shape != (n, n):
            raise MetricError(f"table shape {D.shape} does not match {n} vertices")
        if np.any(~np.isfinite(D)) or np.any(D < 0):
            raise MetricError("distances must be finite and nonnegative")
        if np.any(np.diag(D) != 0):
            raise MetricError("distance table must have zero diagonal")
        if not np.allclose(D, D.T, rtol=0, atol=tol):
            raise MetricError("distance table is not symmetric")
        super().__init__(graph)
        self.table = D
        self.table.setflags(write=False)
        bad = triangle_violations(D, samples=samples, seed=seed,
                                  exhaustive=n < exhaustive_below, tol=tol)
        if bad:
            raise MetricError(f"triangle inequality fails on {bad} triples")
        ed = self.edge_distances()
        self._jump = float(ed.max()) if ed.size else 0.0

    def from_index(self, i: int) -> np.ndarray:
        return self.table[i].copy()

    def edge_distances(self) -> np.ndarray:
        rows, cols, _ = self.graph.edge_arrays()
        keep = rows < cols
        return self.table[rows[keep], cols[keep]]


def triangle_violations(D, samples: int = 10_000, seed: int = 0,
                        exhaustive: bool = False, tol: float = 1e-12) -> int:
    """Number of triples with ``d(x,y) > d(x,z) + d(z,y) + tol``."""
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    if exhaustive:
        count = 0
        for z in range(n):
            count += int(np.count_nonzero(D > D[:, [z]] + D[[z], :] + tol))
        return count
    rng = np.random.default_rng(seed)
    x, y, z = rng.integers(0, n, size=(3, samples))
    return int(np.count_nonzero(D[x, y] > D[x, z] + D[z, y] + tol))


def load_metric_table(path, graph: Graph, **kwargs) -> TableMetric:
    """Read ``x y d`` lines into a :class:`TableMetric`.

    The symmetric closure is applied; every off-diagonal pair must be
    given at least once, and conflicting duplicates are rejected.
    """
    n = graph.n
    D = np.full((n, n), np.nan)
    np.fill_diagonal(D, 0.0)
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise MetricError(f"{path}:{lineno}: expected 'x y d', got {raw!r}")
        try:
            i, j = graph.vertex(parts[0]), graph.vertex(parts[1])
            d = float(parts[2])
        except (IndexError, ValueError) as exc:
            raise MetricError(f"{path}:{lineno}: {exc}") from None
        for a, b in ((i, j), (j, i)):
            if not np.isnan(D[a, b]) and D[a, b] != d:
                raise MetricError(f"{path}:{lineno}: conflicting distance for pair")
            D[a, b] = d
    missing = np.argwhere(np.isnan(D))
    if missing.size:
        a, b = missing[0]
        raise MetricError(f"missing distance for pair {graph.ids[a]!r} {graph.ids[b]!r}")
    return TableMetric(graph, D, **kwargs)


def natural_distance(g: Graph, x, y) -> int:
    """Hop count of a shortest path from ``x`` to ``y``."""
    d = NaturalMetric(g).from_vertex(x)[g.vertex(y)]
    return int(d)


def jump_size(g: Graph, d: PseudoMetric) -> float:
    if d.graph is not g:
        raise MetricError("metric belongs to a different graph")
    return d.jump


@dataclass(frozen=True)
class Ball:
    center: object
    radius: float
    members: frozenset

    def __len__(self):
        return len(self.members)

    def __contains__(self, x):
        return x in self.members


def ball_indices(d: PseudoMetric, center: int, r: float, dist=None) -> np.ndarray:
    """Dense indices of ``B_r(center)``; raises if it reaches the boundary."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    g = d.graph
    dist = d.from_index(center) if dist is None else dist
    inside = dist <= r
    if g.truncated and np.any(inside & g.boundary):
        raise WindowTooSmall(f"ball of radius {r} reaches the window boundary")
    return np.flatnonzero(inside)


def ball(g: Graph, d: PseudoMetric, x0, r: float) -> Ball:
    idx = ball_indices(d, g.vertex(x0), r)
    return Ball(x0, float(r), frozenset(g.ids[i] for i in idx))


def volume(g: Graph, s) -> float:
    """Total node measure of a vertex set (identifiers or a Ball)."""
    if isinstance(s, Ball):
        s = s.members
    idx = [g.vertex(x) for x in s]
    return float(g.mu[idx].sum()) if idx else 0.0


def max_safe_radius(d: PseudoMetric, center: int, dist=None) -> float:
    """Largest radius whose closed ball stays clear of the boundary (exclusive)."""
    g = d.graph
    if not g.truncated or not g.boundary.any():
        return np.inf
    dist = d.from_index(center) if dist is None else dist
    return float(dist[g.boundary].min())
