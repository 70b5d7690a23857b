"""Scaled space-time cutoffs and numerical checks of their bounds.

The cutoff is ``phi_R(x, t) = cutoff((t^theta2 + d(x0, x)^theta1) / R^theta1)``.
Its discrete Laplacian and time derivative are bounded by multiples of
``R^-(1+alpha)`` and ``R^-(theta1/theta2)`` on annular space-time shells;
the sweeps below measure those constants on a window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .graph import Graph, SupportError
from .hypothesis import check_thetas, trend_verdict
from .metrics import PseudoMetric, WindowTooSmall, max_safe_radius
from .potential import Potential

VIOLATION_TOL = 1e-12


class QuinticCutoff:
    """C^2 cutoff: 1 on [0, 1], ``1 - S(p - 1)`` on [1, 2], 0 beyond.

    ``S(t) = 6t^5 - 15t^4 + 10t^3`` is the quintic smoothstep, so the first
    and second derivatives vanish at both ends of the transition.
    """

    max_slope = 15.0 / 8.0
    max_curvature = 10.0 / math.sqrt(3.0)

    def __call__(self, p):
        t = np.clip(np.asarray(p, dtype=float) - 1.0, 0.0, 1.0)
        return np.clip(1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t)), 0.0, 1.0)

    def derivative(self, p):
        p = np.asarray(p, dtype=float)
        t = np.clip(p - 1.0, 0.0, 1.0)
        return -30.0 * t * t * (1.0 - t) ** 2

    def second_derivative(self, p):
        p = np.asarray(p, dtype=float)
        t = p - 1.0
        inside = (t > 0) & (t < 1)
        t = np.where(inside, t, 0.0)
        return np.where(inside, -60.0 * t * (2.0 * t * t - 3.0 * t + 1.0), 0.0)


CUTOFF = QuinticCutoff()


@dataclass(frozen=True)
class TestFnParams:
    theta1: float
    theta2: float
    R: float
    x0: object
    s: float = 3.0
    alpha: float = 1.0
    sigma: float | None = None

    __test__ = False  # not a pytest class

    def __post_init__(self):
        check_thetas(self.theta1, self.theta2, self.alpha)
        if not self.R > 0:
            raise ValueError("R must be positive")
        if self.sigma is not None and not self.s > self.sigma / (self.sigma - 1):
            raise ValueError(f"test exponent s={self.s} must exceed sigma/(sigma-1)")

    @property
    def time_support(self) -> float:
        """Latest time at which ``phi_R`` can be nonzero."""
        return 2.0 ** (1.0 / self.theta2) * self.R ** (self.theta1 / self.theta2)

    @property
    def space_support(self) -> float:
        return 2.0 ** (1.0 / self.theta1) * self.R


class ShellFlags(NamedTuple):
    in_ball: bool
    in_E: bool
    in_F: bool


def shell_flags(params: TestFnParams, dpow, t):
    """Membership of ``(x, t)`` in the ball, E and F shells, given ``d^theta1``."""
    s = np.asarray(dpow, float) + np.asarray(t, float) ** params.theta2
    R, k = params.R, params.theta1
    in_ball = s <= R ** k
    in_E = (R ** k <= s) & (s <= 2 * R ** k)
    in_F = ((R / 2) ** k <= s) & (s <= (4 * R) ** k)
    return in_ball, in_E, in_F


class TestFunction:
    """``phi_R`` bound to a graph and metric, with ``d(x0, .)`` precomputed."""

    __test__ = False

    def __init__(self, graph: Graph, metric: PseudoMetric, params: TestFnParams,
                 cutoff: QuinticCutoff = CUTOFF):
        self.graph, self.metric, self.params, self.cutoff = graph, metric, params, cutoff
        self.x0_index = graph.vertex(params.x0)
        self.dist = metric.from_index(self.x0_index)
        self.dpow = metric.powered_from_index(self.x0_index, params.theta1)

    def _pick(self, arr, x):
        return arr if x is None else float(arr[self.graph.vertex(x)])

    def scaled(self, t, x=None):
        """``(t^theta2 + d^theta1) / R^theta1`` at all vertices, or at ``x``."""
        p = self.params
        return self._pick((t ** p.theta2 + self.dpow) / p.R ** p.theta1, x)

    def value(self, t, x=None):
        return self._pick(self.cutoff(self.scaled(t)), x)

    def time_derivative(self, t, x=None):
        p = self.params
        dpsi = p.theta2 * t ** (p.theta2 - 1.0) / p.R ** p.theta1
        return self._pick(self.cutoff.derivative(self.scaled(t)) * dpsi, x)

    def shell_membership(self, x, t) -> ShellFlags:
        flags = shell_flags(self.params, self.dpow[self.graph.vertex(x)], t)
        return ShellFlags(*(bool(f) for f in flags))

    def space_time(self, times, s: float | None = None):
        """``phi_R^s`` and its time derivative on a time grid, shape (nt, n)."""
        s = self.params.s if s is None else s
        vals = np.empty((len(times), self.graph.n))
        dts = np.empty_like(vals)
        for k, t in enumerate(times):
            phi = self.value(t)
            vals[k] = phi ** s
            dts[k] = s * phi ** (s - 1.0) * self.time_derivative(t)
        return vals, dts


def shell_cover_gaps(params: TestFnParams, samples: int = 20_001) -> int:
    """Points of F_R outside every ``E_rho``, ``rho = 2^(k/theta1 - 1) R``, k <= m.

    ``m`` is the first positive integer with ``m >= 3 theta1 - 1``. Membership
    depends on ``d^theta1 + t^theta2`` only, so that sum is enumerated
    directly over F_R on a fine grid including both end points.
    """
    R, k1 = params.R, params.theta1
    m = max(1, math.ceil(3 * k1 - 1))
    s = np.linspace((R / 2) ** k1, (4 * R) ** k1, samples)
    covered = np.zeros(s.size, bool)
    for k in range(m + 1):
        rho = 2.0 ** (k / k1 - 1.0) * R
        covered |= (rho ** k1 * (1 - 1e-12) <= s) & (s <= 2 * rho ** k1 * (1 + 1e-12))
    return int(np.count_nonzero(~covered))


def time_grid(params: TestFnParams, points: int | None = None) -> np.ndarray:
    """Uniform grid on ``[0, 2^(1/theta2) (4R)^(theta1/theta2)]``."""
    p = params
    end = 2.0 ** (1.0 / p.theta2) * (4 * p.R) ** (p.theta1 / p.theta2)
    n = max(int(math.ceil(4 * p.R ** (p.theta1 / p.theta2))), 2)
    if points is not None:
        n = max(n, points)
    return np.linspace(0.0, end, n)


@dataclass
class BoundCheck:
    R: float
    cmax: float
    support_violations: int
    samples: int


class _SortedWindow:
    """Vertices sorted by distance from x0, with CSR rows in that order."""

    def __init__(self, tf: TestFunction):
        g = tf.graph
        perm = np.argsort(tf.dist, kind="stable")
        W = g.weights[perm][:, perm].tocsr()
        self.dist = tf.dist[perm]
        self.dpow = tf.dpow[perm]
        self.mu = g.mu[perm]
        self.deg = g.degree[perm]
        self.interior = g.interior[perm]
        self.indptr, self.indices, self.data = W.indptr, W.indices, W.data
        self.row_of = np.repeat(np.arange(g.n), np.diff(W.indptr))

    def slab(self, lo, hi):
        return (int(np.searchsorted(self.dist, lo, side="left")),
                int(np.searchsorted(self.dist, hi, side="right")))

    def laplacian_rows(self, a, b, phi_of):
        """Window Laplacian of ``phi_of(dpow)`` on sorted rows ``[a, b)``."""
        s, e = self.indptr[a], self.indptr[b]
        cols = self.indices[s:e]
        acc = np.bincount(self.row_of[s:e] - a, weights=self.data[s:e] * phi_of(self.dpow[cols]),
                          minlength=b - a)
        return (acc - self.deg[a:b] * phi_of(self.dpow[a:b])) / self.mu[a:b]


def _prepare(graph, metric, params, reach=5.0):
    tf = TestFunction(graph, metric, params)
    j = metric.jump
    if params.R < 2 * j:
        raise ValueError(f"R={params.R} must be at least twice the jump size {j}")
    safe = max_safe_radius(metric, tf.x0_index, tf.dist)
    if reach * params.R >= safe:
        raise WindowTooSmall(f"window must contain B_{reach * params.R}(x0)")
    return tf, j


def _slab_bounds(params, t, j):
    R, k1, k2 = params.R, params.theta1, params.theta2
    u = t ** k2
    if u >= 2 * R ** k1:
        return None
    d_lo = max(0.0, R ** k1 - u) ** (1.0 / k1)
    d_hi = (2 * R ** k1 - u) ** (1.0 / k1)
    return d_lo - 2 * j, d_hi + 2 * j


def _sweep(graph, metric, params, kind, time_points=None, coarse_points=64):
    tf, j = _prepare(graph, metric, params)
    p = params
    times = time_grid(p, time_points)
    win = _SortedWindow(tf)
    scale_R = p.R ** (1 + p.alpha) if kind == "laplacian" else p.R ** (p.theta1 / p.theta2)
    Rk = p.R ** p.theta1
    cut = tf.cutoff
    cmax = 0.0
    violations = 0
    samples = 0

    def account(quantity, dpow_rows, t, interior):
        nonlocal cmax, violations, samples
        q = quantity[interior]
        if q.size == 0:
            return
        samples += q.size
        cmax = max(cmax, float(q.max()) * scale_R)
        _, in_E, in_F = shell_flags(p, dpow_rows[interior], t)
        outside = ~in_F if kind == "laplacian" else ~in_E
        violations += int(np.count_nonzero(outside & (q > VIOLATION_TOL)))

    # Dense time grid on the slab of vertices whose cutoff value, or that of a
    # neighbour, can lie in the transition band; plus a margin of 2j.
    for t in times:
        bounds = _slab_bounds(p, t, j)
        if bounds is None:
            continue
        a, b = win.slab(*bounds)
        if a >= b:
            continue
        u = t ** p.theta2
        rows_dpow = win.dpow[a:b]
        if kind == "laplacian":
            q = -win.laplacian_rows(a, b, lambda dp: cut((u + dp) / Rk))
        else:
            dpsi = p.theta2 * t ** (p.theta2 - 1.0) / Rk
            q = -cut.derivative((u + rows_dpow) / Rk) * dpsi
        account(q, rows_dpow, t, win.interior[a:b])

    # Coarse time grid over the whole window, to catch anything outside the slab.
    L = graph.laplacian_matrix
    for t in times[:: max(1, len(times) // coarse_points)]:
        if kind == "laplacian":
            q = -(L @ tf.value(t))
        else:
            q = -tf.time_derivative(t)
        account(q, tf.dpow, t, graph.interior)
    return BoundCheck(float(p.R), cmax, violations, samples)


def verify_laplacian_bound(graph: Graph, metric: PseudoMetric, params: TestFnParams,
                           time_points: int | None = None) -> BoundCheck:
    """Max of ``-Delta phi_R * R^(1+alpha)`` and support violations outside F_R."""
    return _sweep(graph, metric, params, "laplacian", time_points)


def verify_time_bound(graph: Graph, metric: PseudoMetric, params: TestFnParams,
                      time_points: int | None = None) -> BoundCheck:
    """Max of ``-d/dt phi_R * R^(theta1/theta2)`` and violations outside E_R."""
    return _sweep(graph, metric, params, "time", time_points)


def transition_band_violations(graph: Graph, metric: PseudoMetric, params: TestFnParams,
                               time_points: int | None = None, batch: int = 32) -> int:
    """Edges whose scaled-distance interval meets (1, 2) away from F_R.

    For every interior ``x``, sampled ``t`` with ``d^theta1 + t^theta2`` at
    least ``(4R)^theta1`` or at most ``(R/2)^theta1``, and every neighbour
    ``y``, the interval between the scaled distances of ``x`` and ``y`` must
    avoid the open transition band of the cutoff. Returns the number of
    ``(x, y, t)`` triples where it does not.
    """
    tf, _ = _prepare(graph, metric, params)
    p = params
    rows, cols, _ = graph.edge_arrays()
    keep = graph.interior[rows]
    dx, dy = tf.dpow[rows[keep]], tf.dpow[cols[keep]]
    Rk = p.R ** p.theta1
    lo_s, hi_s = (p.R / 2) ** p.theta1, (4 * p.R) ** p.theta1
    times = time_grid(p, time_points)
    count = 0
    for k in range(0, len(times), batch):
        u = (times[k:k + batch] ** p.theta2)[:, None]
        sx = dx[None, :] + u
        sy = dy[None, :] + u
        far = (sx >= hi_s) | (sx <= lo_s)
        a = np.minimum(sx, sy) / Rk
        b = np.maximum(sx, sy) / Rk
        count += int(np.count_nonzero(far & (a < 2) & (b > 1)))
    return count


def power_convexity_defect(graph: Graph, metric: PseudoMetric, params: TestFnParams,
                           times) -> float:
    """Max over interior vertices of ``-Delta(phi^s) + s phi^(s-1) Delta phi``.

    Convexity of ``p -> p^s`` makes this at most zero.
    """
    tf = TestFunction(graph, metric, params)
    L = graph.laplacian_matrix
    s = params.s
    worst = -np.inf
    for t in times:
        phi = tf.value(t)
        lhs = -(L @ phi ** s)
        rhs = -s * phi ** (s - 1) * (L @ phi)
        worst = max(worst, float((lhs - rhs)[graph.interior].max()))
    return worst


def bound_ladder(graph: Graph, metric: PseudoMetric, base: TestFnParams, radii,
                 time_points: int | None = None) -> dict:
    """Both bound sweeps along a radius ladder, with trend verdicts."""
    rows = []
    for R in radii:
        p = TestFnParams(base.theta1, base.theta2, float(R), base.x0, base.s, base.alpha, base.sigma)
        lap = verify_laplacian_bound(graph, metric, p, time_points)
        tim = verify_time_bound(graph, metric, p, time_points)
        rows.append((float(R), lap.cmax, tim.cmax, lap.support_violations + tim.support_violations))
    radii = [r[0] for r in rows]

    def verdict(col):
        # one radius says nothing about growth
        return trend_verdict([r[col] for r in rows], radii) if len(rows) > 1 else "inconclusive"

    return {"rows": rows, "laplacian_verdict": verdict(1), "time_verdict": verdict(2)}


class WeakFormResidual(NamedTuple):
    value: float
    scale: float


def weak_form_residual(graph: Graph, times, u, test, test_dt, potential: Potential,
                       sigma: float, space_values=None) -> WeakFormResidual:
    """Discretised very-weak-solution functional of a trajectory.

    ``int sum mu (Delta u phi + v u^sigma phi + u phi_t) dt + sum mu u0 phi0``
    with the time integral done by the trapezoid rule on ``times``. It is
    zero for exact solutions and nonpositive for supersolutions. ``scale``
    is the same expression with every term in absolute value.
    """
    times = np.asarray(times, float)
    u = np.asarray(u, float)
    test = np.asarray(test, float)
    test_dt = np.asarray(test_dt, float)
    if u.shape != test.shape or u.shape != test_dt.shape or u.shape[0] != times.size:
        raise ValueError("trajectory, test function and time grid do not align")
    if np.any(test < 0):
        raise SupportError("test function must be nonnegative")
    if np.any(u < 0):
        raise ValueError("trajectory must be nonnegative")
    if np.any(test[-1] > 0) or np.any(test_dt[-1] != 0):
        raise SupportError("test function does not vanish by the final time")
    support = np.any(test > 0, axis=0) | np.any(test_dt != 0, axis=0)
    if graph.truncated and np.any(support & graph.boundary):
        raise SupportError("test function support touches the window boundary")

    mu = graph.mu
    gvals = potential.space_values(space_values, graph.n) if space_values is None \
        else np.asarray(space_values, float)
    lap = (graph.laplacian_matrix @ u.T).T
    fvals = potential.time(times)[:, None]
    terms = (lap * test, fvals * gvals * u ** sigma * test, u * test_dt)
    total = sum(terms) @ mu
    absolute = sum(np.abs(x) for x in terms) @ mu
    init = float(np.dot(mu, u[0] * test[0]))
    value = float(np.trapezoid(total, times)) + init
    scale = float(np.trapezoid(absolute, times)) + abs(init)
    return WeakFormResidual(value, scale)
