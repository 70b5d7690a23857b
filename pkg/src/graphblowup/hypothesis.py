"""Numerical checks of the structural and volume-growth hypotheses.

Everything here is measured on a finite window, so "there is a constant C"
becomes "the least admissible C on the window", and "bounded for all R"
becomes a trend verdict over a dyadic ladder (see :func:`trend_verdict`).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .graph import Graph, laplacian_field
from .metrics import PseudoMetric, WindowTooSmall, max_safe_radius
from .potential import Potential

MET = "nonexistence-criteria-met"
NOT_MET = "not-met"
INCONCLUSIVE = "inconclusive"


def trend_verdict(values: Sequence[float], xs: Sequence[float] | None = None,
                  factor: float = 1.5, slope_tol: float = 0.1) -> str:
    """Classify a sequence measured along an increasing ladder.

    ``MET`` when the maximum over the top half of the ladder is at most
    ``factor`` times the maximum over the bottom half; otherwise ``NOT_MET``
    when the log-log slope exceeds ``slope_tol``, else ``INCONCLUSIVE``.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise ValueError("need at least two ladder points")
    xs = np.arange(1, v.size + 1, dtype=float) if xs is None else np.asarray(xs, float)
    if not np.all(np.isfinite(v)):
        return NOT_MET
    half = v.size // 2
    bottom, top = v[:half].max(), v[half:].max()
    if bottom > 0 and top <= factor * bottom:
        return MET
    if bottom <= 0 and top <= 0:
        return MET
    pos = v > 0
    if pos.sum() >= 2:
        slope = np.polyfit(np.log(xs[pos]), np.log(v[pos]), 1)[0]
        if slope > slope_tol:
            return NOT_MET
    return INCONCLUSIVE


def loglog_fit(xs, ys) -> tuple[float, float]:
    """Least-squares slope of ``log y`` against ``log x`` and max abs residual."""
    lx = np.log(np.asarray(xs, float))
    ly = np.log(np.asarray(ys, float))
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    return float(coef[0]), float(np.abs(resid).max())


@dataclass
class HypothesisQuery:
    """Parameters of one nonexistence check.

    ``radii`` is the increasing ladder of test radii R; ``times`` is the
    ladder of horizons T used on finite graphs.
    """

    graph: Graph
    metric: PseudoMetric
    x0: object
    alpha: float = 1.0
    R0: float = 1.5
    sigma: float = 2.0
    potential: Potential = field(default_factory=Potential)
    theta1: float | None = None
    theta2: float | None = None
    radii: Sequence[float] = ()
    times: Sequence[float] = ()

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise ValueError(f"alpha={self.alpha} must lie in [0, 1]")
        if not self.R0 >= 1:
            raise ValueError(f"R0={self.R0} must be at least 1")
        if not self.sigma > 1:
            raise ValueError("sigma must exceed 1")
        if self.theta1 is None:
            self.theta1 = 2.0 * (1.0 + self.alpha)
        if self.theta2 is None:
            self.theta2 = 2.0
        check_thetas(self.theta1, self.theta2, self.alpha)
        r = np.asarray(self.radii, float)
        if r.size and np.any(np.diff(r) <= 0):
            raise ValueError("radii must be strictly increasing")
        self.x0_index = self.graph.vertex(self.x0)

    @property
    def exponent(self) -> float:
        """The power ``-1/(sigma-1)`` applied to the potential."""
        return -1.0 / (self.sigma - 1.0)

    def distances(self) -> np.ndarray:
        return self.metric.from_index(self.x0_index)


def check_thetas(theta1: float, theta2: float, alpha: float) -> None:
    if theta1 < 2:
        raise ValueError(f"theta1={theta1} must be >= 2")
    if theta2 < 1:
        raise ValueError(f"theta2={theta2} must be >= 1")
    if theta1 / theta2 < 1 + alpha - 1e-12:
        raise ValueError(f"theta1/theta2 >= 1+alpha violated: "
                         f"{theta1}/{theta2} < 1+{alpha}")


# --- structural constants ----------------------------------------------------

def edge_mass_bound(g: Graph) -> float:
    """Least C with ``sum_y omega_xy <= C mu(x)`` over interior vertices."""
    ratio = (g.degree + 0.0) / g.mu
    return float(ratio[g.interior].max())


def _region(q: HypothesisQuery, dist: np.ndarray) -> np.ndarray:
    """Interior vertices with ``R0 <= d(x, x0) <= Rmax``."""
    g = q.graph
    rmax = float(q.radii[-1]) if len(q.radii) else None
    safe = max_safe_radius(q.metric, q.x0_index, dist)
    if rmax is None:
        mask = dist < safe
    else:
        if rmax >= safe:
            raise WindowTooSmall(f"boundary vertices lie within distance {rmax} of x0")
        mask = dist <= rmax
    mask &= (dist >= q.R0) & g.interior
    if not mask.any():
        raise ValueError("no interior vertex with d(x, x0) >= R0 in range")
    return mask


def _distance_laplacians(q: HypothesisQuery):
    d = q.distances()
    mask = _region(q, d)
    lap_d = laplacian_field(q.graph, d)
    lap_pow = laplacian_field(q.graph, q.metric.powered_from_index(q.x0_index, 1 + q.alpha))
    return d, mask, lap_d, lap_pow


def laplacian_distance_bound(q: HypothesisQuery) -> float:
    """Least C with ``Delta d(x, x0) <= C / d^alpha`` on the sampled region."""
    d, mask, lap_d, _ = _distance_laplacians(q)
    return float((lap_d[mask] * d[mask] ** q.alpha).max())


def distance_power_check(q: HypothesisQuery) -> tuple[float, float]:
    """``(sup Delta d * d^alpha, sup Delta d^(1+alpha))`` over the region."""
    d, mask, lap_d, lap_pow = _distance_laplacians(q)
    return float((lap_d[mask] * d[mask] ** q.alpha).max()), float(lap_pow[mask].max())


def convexity_defect(q: HypothesisQuery) -> float:
    """Most negative value of ``Delta d^(1+a) - (1+a) d^a Delta d``, relative.

    Convexity of ``p -> p^(1+a)`` makes this nonnegative at every vertex.
    """
    d, mask, lap_d, lap_pow = _distance_laplacians(q)
    rhs = (1 + q.alpha) * d[mask] ** q.alpha * lap_d[mask]
    gap = lap_pow[mask] - rhs
    scale = np.maximum(1.0, np.abs(lap_pow[mask]) + np.abs(rhs))
    return float((gap / scale).min())


@dataclass
class DistancePowerProfile:
    radii: list
    first: list
    second: list
    first_verdict: str
    second_verdict: str

    @property
    def agree(self) -> bool:
        return (self.first_verdict == MET) == (self.second_verdict == MET)


def distance_power_profile(q: HypothesisQuery, ladder: Sequence[float]) -> DistancePowerProfile:
    """Running suprema of both quantities over ``R0 <= d <= R`` along ``ladder``.

    A supremum that stays bounded as the window grows is read as finite.
    """
    d = q.distances()
    lap_d = laplacian_field(q.graph, d)
    lap_pow = laplacian_field(q.graph, q.metric.powered_from_index(q.x0_index, 1 + q.alpha))
    first_vals = lap_d * d ** q.alpha
    safe = max_safe_radius(q.metric, q.x0_index, d)
    base = (d >= q.R0) & q.graph.interior
    firsts, seconds, used = [], [], []
    for R in ladder:
        if R >= safe:
            raise WindowTooSmall(f"radius {R} reaches the window boundary")
        m = base & (d <= R)
        if not m.any():
            continue
        used.append(float(R))
        firsts.append(float(first_vals[m].max()))
        seconds.append(float(lap_pow[m].max()))
    return DistancePowerProfile(used, firsts, seconds,
                                trend_verdict(firsts, used), trend_verdict(seconds, used))


# --- volume growth ---------------------------------------------------------------

def weighted_ball_sums(g: Graph, d: PseudoMetric, x0, radii, weights=None,
                       dist=None) -> np.ndarray:
    """``sum_{x in B_R(x0)} weights(x)`` for each R (default weights: mu)."""
    i0 = g.vertex(x0)
    dist = d.from_index(i0) if dist is None else dist
    w = g.mu if weights is None else weights
    safe = max_safe_radius(d, i0, dist)
    radii = np.asarray(radii, float)
    if radii.size and radii.max() >= safe:
        raise WindowTooSmall(f"ball of radius {radii.max()} reaches the window boundary")
    order = np.argsort(dist, kind="stable")
    cum = np.cumsum(w[order])
    k = np.searchsorted(dist[order], radii, side="right")
    return np.where(k > 0, cum[np.maximum(k - 1, 0)], 0.0)


def volume_growth_fit(g: Graph, d: PseudoMetric, x0, radii, weights=None) -> tuple[float, float]:
    """Fitted exponent delta in ``Vol(B_R) ~ R^delta`` and the max log residual."""
    radii = np.asarray(radii, float)
    if radii.size < 3:
        raise ValueError("volume fit needs at least three radii")
    vols = weighted_ball_sums(g, d, x0, radii, weights)
    return loglog_fit(radii, vols)


# --- space-time condition ------------------------------------------------------

@dataclass
class LadderResult:
    """Per-rung quantity, allowed bound and margin with an overall verdict."""

    ladder: list
    quantity: list
    bound: list
    margin: list
    verdict: str
    label: str = "R"

    def rows(self):
        return list(zip(self.ladder, self.quantity, self.bound, self.margin))


def _admissible_radii(q: HypothesisQuery, dist: np.ndarray, reach: float) -> np.ndarray:
    safe = max_safe_radius(q.metric, q.x0_index, dist)
    radii = np.asarray(q.radii, float)
    radii = radii[radii >= q.R0]
    ok = reach * radii < safe
    if not ok.all():
        bad = radii[~ok][0]
        raise WindowTooSmall(f"radius {bad}: shell reaches the window boundary")
    if radii.size < 2:
        raise ValueError("need at least two radii >= R0")
    return radii


def shell_integral(q: HypothesisQuery, R: float, dpow=None, gpow=None) -> float:
    """``int_0^inf sum_x 1_{E_R} v^(-1/(sigma-1)) mu dt`` for separable v.

    For each vertex the set of times in the shell is one interval, so the
    integral reduces to a sum of exact time integrals of ``f^e``.
    """
    t1, t2 = q.theta1, q.theta2
    e = q.exponent
    if dpow is None:
        dpow = q.metric.powered_from_index(q.x0_index, t1)
    if gpow is None:
        gpow = _space_weights(q)
    top = 2.0 * R ** t1
    sel = dpow <= top
    vals, inv = np.unique(dpow[sel], return_inverse=True)
    lo = np.maximum(0.0, R ** t1 - vals) ** (1.0 / t2)
    hi = (top - vals) ** (1.0 / t2)
    tint = q.potential.time.integral(lo, hi, e)
    spatial = np.bincount(inv, weights=(q.graph.mu * gpow)[sel], minlength=vals.size)
    return float(np.dot(spatial, tint))


def _space_weights(q: HypothesisQuery) -> np.ndarray:
    sp_ = q.potential.space
    dist = q.distances() if sp_.needs_distance else None
    return sp_(dist, q.graph.n) ** q.exponent


def spacetime_condition(q: HypothesisQuery) -> LadderResult:
    """Margins ``I(R) / R^((1+alpha) sigma/(sigma-1))`` along the radius ladder."""
    dist = q.distances()
    radii = _admissible_radii(q, dist, 2.0 ** (1.0 / q.theta1))
    dpow = q.metric.powered_from_index(q.x0_index, q.theta1)
    gpow = _space_weights(q)
    power = (1 + q.alpha) * q.sigma / (q.sigma - 1)
    vals = [shell_integral(q, R, dpow, gpow) for R in radii]
    bounds = [float(R ** power) for R in radii]
    margins = [v / b for v, b in zip(vals, bounds)]
    return LadderResult([float(r) for r in radii], vals, bounds, margins,
                        trend_verdict(margins, radii))


def finite_graph_condition(g: Graph, potential: Potential, sigma: float,
                           T_list: Sequence[float], dist=None) -> LadderResult:
    """Margins ``J(T) / T^(sigma/(sigma-1))`` with ``J(T) = int_T^2T sum v^e mu``."""
    if g.truncated:
        raise ValueError("finite-graph condition needs a genuinely finite graph")
    if not sigma > 1:
        raise ValueError("sigma must exceed 1")
    e = -1.0 / (sigma - 1.0)
    T = np.asarray(T_list, float)
    if T.size < 2 or np.any(T <= 0):
        raise ValueError("need at least two positive horizons")
    spatial = float(np.dot(g.mu, potential.space(dist, g.n) ** e))
    with np.errstate(over="ignore"):
        vals = spatial * np.asarray(potential.time.integral(T, 2 * T, e), float)
        bounds = T ** (sigma / (sigma - 1))
        margins = vals / bounds
    return LadderResult(T.tolist(), vals.tolist(), bounds.tolist(), margins.tolist(),
                        trend_verdict(margins, T), label="T")


# --- corollary-style criteria ------------------------------------------------------

@dataclass
class CorollaryVerdict:
    path: str
    delta1: float
    delta2: float
    lhs: float
    bound: float
    fit_residual: float
    verdict: str
    finite: LadderResult | None = None

    def to_dict(self):
        out = asdict(self)
        if self.finite is None:
            out.pop("finite")
        return out


def corollary_conditions(q: HypothesisQuery, fit_tol: float = 0.05,
                         residual_tol: float = 0.25) -> CorollaryVerdict:
    """Separable-potential criterion ``(1+a) delta1 + delta2 <= (1+a) sigma/(sigma-1)``.

    ``delta1`` is fitted from ``int_0^T f^e`` with ``T = 2^(1/theta2) R^(theta1/theta2)``
    and ``delta2`` from ``sum_{B_R} mu g^e``. Constant time factor gives the
    time-independent path, constant space factor too gives the pure volume
    path. Finite graphs go through :func:`finite_graph_condition`.
    """
    pot = q.potential
    if not q.graph.truncated:
        times = q.times if len(q.times) else [2.0 ** k for k in range(6)]
        dist = q.distances() if pot.space.needs_distance else None
        res = finite_graph_condition(q.graph, pot, q.sigma, times, dist)
        return CorollaryVerdict("finite-graph", float("nan"), float("nan"), float("nan"),
                                float("nan"), float("nan"), res.verdict, res)
    if pot.is_constant:
        path = "volume"
    elif pot.time_independent:
        path = "time-independent"
    else:
        path = "separable"
    dist = q.distances()
    radii = _admissible_radii(q, dist, 1.0)
    e = q.exponent
    T = 2.0 ** (1.0 / q.theta2) * radii ** (q.theta1 / q.theta2)
    tints = np.asarray(pot.time.integral(np.zeros_like(T), T, e), float)
    delta1, res1 = loglog_fit(T, tints)
    sums = weighted_ball_sums(q.graph, q.metric, q.x0, radii,
                              q.graph.mu * _space_weights(q), dist)
    delta2, res2 = loglog_fit(radii, sums)
    delta1, delta2 = max(delta1, 0.0), max(delta2, 0.0)
    lhs = (1 + q.alpha) * delta1 + delta2
    bound = (1 + q.alpha) * q.sigma / (q.sigma - 1)
    resid = max(res1, res2)
    if resid > residual_tol:
        verdict = INCONCLUSIVE
    else:
        verdict = MET if lhs <= bound + fit_tol else NOT_MET
    return CorollaryVerdict(path, delta1, delta2, lhs, bound, resid, verdict)


# --- full report -------------------------------------------------------------------

@dataclass
class HypothesisReport:
    edge_mass_C: float
    jump: float
    lap_dist_C: float
    power_lap_C: float
    volume_exponent: float
    volume_residual: float
    condition: LadderResult
    corollary: CorollaryVerdict
    verdict: str
    fired: list

    def summary(self) -> dict:
        return {
            "edge_mass_C": self.edge_mass_C,
            "jump": self.jump,
            "lap_dist_C": self.lap_dist_C,
            "power_lap_C": self.power_lap_C,
            "volume_exponent": self.volume_exponent,
            "volume_residual": self.volume_residual,
            "condition_label": self.condition.label,
            "condition_margins": self.condition.margin,
            "condition_verdict": self.condition.verdict,
            "corollary": self.corollary.to_dict(),
            "verdict": self.verdict,
            "fired": self.fired,
        }


def check_hypotheses(q: HypothesisQuery) -> HypothesisReport:
    """Run every check on ``q`` and combine the verdicts."""
    g = q.graph
    first, second = distance_power_check(q)
    lap_C = laplacian_distance_bound(q)
    cor = corollary_conditions(q)
    if g.truncated:
        vr = np.asarray(q.radii, float)
        vr = vr[vr >= q.R0]
        delta, vres = volume_growth_fit(g, q.metric, q.x0, vr) if vr.size >= 3 else (np.nan, np.nan)
        cond = spacetime_condition(q)
    else:
        diam = float(q.distances().max())
        vr = np.linspace(max(1.0, diam / 4), max(2.0, diam), 4)
        delta, vres = volume_growth_fit(g, q.metric, q.x0, vr)
        cond = cor.finite
    fired = []
    if cond.verdict == MET:
        fired.append("spacetime" if g.truncated else "finite-graph")
    if cor.verdict == MET and cor.path not in fired:
        fired.append(cor.path)
    if fired:
        verdict = MET
    elif cond.verdict == NOT_MET and cor.verdict == NOT_MET:
        verdict = NOT_MET
    else:
        verdict = INCONCLUSIVE
    return HypothesisReport(edge_mass_bound(g), q.metric.jump, lap_C, second,
                            delta, vres, cond, cor, verdict, fired)
