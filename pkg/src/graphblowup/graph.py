"""Weighted graphs (V, omega, mu) and the discrete calculus on them."""

from __future__ import annotations

from functools import cached_property
from typing import Hashable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

WEIGHT_FLOOR = 1e-15


class GraphError(ValueError):
    """Raised when a graph violates one of the structural invariants."""


class SupportError(ValueError):
    """Raised when a field's support touches the truncation boundary."""


class Graph:
    """Connected, locally finite, undirected weighted graph.

    Infinite graphs are represented by a finite window. Vertices whose
    neighbourhood is cut by the window are flagged in ``boundary``; the
    weight of their missing edges is kept in ``missing_weight`` so that a
    Dirichlet-zero exterior can be imposed.

    Parameters
    ----------
    vertices : sequence of hashable
        Opaque vertex identifiers, mapped to dense indices in order.
    mu : array_like
        Positive node measure, one value per vertex.
    weights : sparse matrix
        Symmetric, nonnegative edge weights with zero diagonal.
    boundary : array_like of bool, optional
        Truncation flags. ``None`` means the graph is genuinely finite.
    missing_weight : array_like, optional
        Total weight of edges leaving the window, per vertex.
    coords : ndarray, optional
        Integer coordinates for lattice-like vertices.
    """

    def __init__(
        self,
        vertices: Sequence[Hashable],
        mu,
        weights,
        boundary=None,
        missing_weight=None,
        coords=None,
        name: str = "graph",
    ):
        self.ids = tuple(vertices)
        n = len(self.ids)
        self.index = {v: i for i, v in enumerate(self.ids)}
        if len(self.index) != n:
            raise GraphError("duplicate vertex identifiers")

        mu = np.asarray(mu, dtype=float).reshape(-1)
        if mu.shape != (n,):
            raise GraphError(f"mu has {mu.size} entries for {n} vertices")
        if not np.all(np.isfinite(mu)) or np.any(mu <= 0):
            raise GraphError("node measure must be positive and finite")

        W = sp.csr_matrix(weights, dtype=float, shape=(n, n), copy=True)
        W.data[W.data < WEIGHT_FLOOR] = 0.0
        W.eliminate_zeros()
        W.sort_indices()
        if W.nnz and W.data.min() < 0:
            raise GraphError("edge weights must be nonnegative")
        if W.diagonal().any():
            raise GraphError("graph has a loop (nonzero diagonal weight)")
        asym = abs(W - W.T)
        if asym.nnz and asym.max() > 1e-12 * max(1.0, W.max()):
            raise GraphError("edge weights are not symmetric")

        self.truncated = boundary is not None
        boundary = np.zeros(n, bool) if boundary is None else np.asarray(boundary, bool)
        if missing_weight is None:
            missing_weight = np.zeros(n)
        missing_weight = np.asarray(missing_weight, dtype=float)
        if boundary.shape != (n,) or missing_weight.shape != (n,):
            raise GraphError("boundary flags must align with vertices")

        if n > 1:
            ncomp, _ = connected_components(W, directed=False)
            if ncomp != 1:
                raise GraphError(f"graph is disconnected ({ncomp} components)")

        self.mu = mu
        self.weights = W
        self.boundary = boundary
        self.missing_weight = missing_weight
        self.coords = None if coords is None else np.asarray(coords)
        self.name = name
        for arr in (self.mu, self.boundary, self.missing_weight, self.weights.data,
                    self.weights.indices, self.weights.indptr):
            arr.setflags(write=False)
        if self.coords is not None:
            self.coords.setflags(write=False)

    def __repr__(self):
        kind = "window" if self.truncated else "finite"
        return f"Graph({self.name!r}, n={self.n}, edges={self.num_edges}, {kind})"

    def __len__(self):
        return self.n

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def num_edges(self) -> int:
        return self.weights.nnz // 2

    @cached_property
    def degree(self) -> np.ndarray:
        """Weighted degree ``sum_y omega_xy`` inside the window."""
        d = np.asarray(self.weights.sum(axis=1)).ravel()
        d.setflags(write=False)
        return d

    @cached_property
    def interior(self) -> np.ndarray:
        m = ~self.boundary
        m.setflags(write=False)
        return m

    def vertex(self, x) -> int:
        """Dense index of vertex ``x``. Plain ints also resolve 1-tuples."""
        try:
            return self.index[x]
        except KeyError:
            pass
        if not isinstance(x, tuple) and (x,) in self.index:
            return self.index[(x,)]
        raise IndexError(f"unknown vertex {x!r}")

    def neighbors(self, x) -> list:
        i = self.vertex(x)
        W = self.weights
        return [self.ids[j] for j in W.indices[W.indptr[i]:W.indptr[i + 1]]]

    def edges(self) -> Iterable[tuple[int, int, float]]:
        """Each undirected edge once, as index pairs ``i < j``."""
        T = sp.triu(self.weights, k=1).tocoo()
        return zip(T.row.tolist(), T.col.tolist(), T.data.tolist())

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Directed edge list ``(rows, cols, weights)`` in CSR order."""
        W = self.weights
        rows = np.repeat(np.arange(self.n), np.diff(W.indptr))
        return rows, W.indices, W.data

    @cached_property
    def laplacian_matrix(self) -> sp.csr_matrix:
        """Sparse operator ``f -> Delta f`` built from the window edges."""
        L = sp.diags(1.0 / self.mu) @ (self.weights - sp.diags(self.degree))
        return sp.csr_matrix(L)

    @cached_property
    def dirichlet_matrix(self) -> sp.csr_matrix:
        """Laplacian with zero values imposed outside the window."""
        return sp.csr_matrix(self.laplacian_matrix - sp.diags(self.missing_weight / self.mu))

    def field(self, values) -> np.ndarray:
        f = np.asarray(values, dtype=float)
        if f.shape != (self.n,):
            raise ValueError(f"field has shape {f.shape}, expected ({self.n},)")
        return f

    def with_measure(self, mu) -> "Graph":
        return Graph(self.ids, mu, self.weights, self.boundary if self.truncated else None,
                     self.missing_weight, self.coords, self.name)

    def scaled(self, lam: float) -> "Graph":
        """Same graph with both mu and omega multiplied by ``lam``."""
        return Graph(self.ids, lam * self.mu, lam * self.weights,
                     self.boundary if self.truncated else None,
                     lam * self.missing_weight, self.coords, self.name)


def difference(g: Graph, f, x, y) -> float:
    """``f(y) - f(x)``."""
    f = np.asarray(f)
    return float(f[g.vertex(y)] - f[g.vertex(x)])


def laplacian(g: Graph, f, x) -> float:
    """Weighted Laplacian of ``f`` at a single vertex."""
    i = g.vertex(x)
    f = np.asarray(f, dtype=float)
    W = g.weights
    lo, hi = W.indptr[i], W.indptr[i + 1]
    return float(np.dot(W.data[lo:hi], f[W.indices[lo:hi]] - f[i]) / g.mu[i])


def laplacian_field(g: Graph, f) -> np.ndarray:
    """Laplacian at every vertex.

    Values at ``g.boundary`` vertices only see the window edges and are
    not the Laplacian of the infinite graph.
    """
    f = g.field(f)
    return (g.weights @ f - g.degree * f) / g.mu


def _check_support(g: Graph, f, h):
    fs = np.flatnonzero(f)
    hs = np.flatnonzero(h)
    if not g.truncated:
        return
    if not (np.any(g.boundary[fs]) and np.any(g.boundary[hs])):
        return
    raise SupportError("both fields have support touching the truncation boundary")


def integration_by_parts_residual(g: Graph, f, h, with_scale: bool = False):
    """Defect in ``sum Delta f h mu = -1/2 sum omega grad f grad h``.

    At least one of ``f``, ``h`` must have its support away from the
    truncation boundary; otherwise the identity is not exact on a window.
    With ``with_scale`` the sum of absolute values of all terms is
    returned as well, for relative comparisons.
    """
    f = g.field(f)
    h = g.field(h)
    _check_support(g, f, h)
    lhs_terms = laplacian_field(g, f) * h * g.mu
    rows, cols, w = g.edge_arrays()
    rhs_terms = 0.5 * w * (f[cols] - f[rows]) * (h[cols] - h[rows])
    res = float(lhs_terms.sum() + rhs_terms.sum())
    if with_scale:
        return res, float(np.abs(lhs_terms).sum() + np.abs(rhs_terms).sum())
    return res
