"""Random connected test graphs built independently of the package builders."""

import numpy as np
import scipy.sparse as sp

from graphblowup import Graph


def random_graph(n, seed=0, extra=None, weight_range=(0.2, 2.0), mu_range=(0.5, 3.0)):
    """Random spanning tree plus ``extra`` chords, random weights and measure."""
    rng = np.random.default_rng(seed)
    extra = n if extra is None else extra
    extra = min(extra, n * (n - 1) // 2 - (n - 1))
    pairs = {(int(rng.integers(0, i)), i) for i in range(1, n)}
    while len(pairs) < n - 1 + extra:
        a, b = sorted(rng.choice(n, 2, replace=False).tolist())
        pairs.add((a, b))
    rows, cols = np.array(sorted(pairs)).T
    w = rng.uniform(*weight_range, rows.size)
    W = sp.coo_matrix((np.r_[w, w], (np.r_[rows, cols], np.r_[cols, rows])), shape=(n, n))
    mu = rng.uniform(*mu_range, n)
    return Graph(list(range(n)), mu, W.tocsr(), name=f"random{n}")


def dense_laplacian(g):
    """Per-vertex loop over a dense weight matrix; an oracle for the sparse code."""
    W = g.weights.toarray()
    n = g.n

    def apply(f):
        out = np.empty(n)
        for x in range(n):
            out[x] = sum(W[x, y] * (f[y] - f[x]) for y in range(n) if W[x, y] > 0) / g.mu[x]
        return out
    return apply
