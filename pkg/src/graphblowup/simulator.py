"""Time stepping of ``u_t = Delta u + v u^sigma`` on graphs and lattice windows."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .graph import Graph
from .metrics import PseudoMetric
from .potential import Potential

log = logging.getLogger(__name__)

BLOW_UP = "blow-up"
GLOBAL_DECAY = "global-decay"
UNDECIDED = "undecided"


class StepError(ArithmeticError):
    """An explicit step produced a negative value; ``dt`` is too large."""


@dataclass
class SimConfig:
    """Settings for one run.

    ``dt="auto"`` picks ``0.4 / max(sum omega / mu)`` for the explicit scheme.
    ``reaction_limit`` caps ``dt * v * u^(sigma-1)`` so the step shrinks as
    the solution grows; ``None`` keeps the step fixed. ``reaction=False``
    switches the nonlinear term off (pure diffusion).
    """

    sigma: float
    initial: np.ndarray
    t_max: float
    potential: Potential = field(default_factory=Potential)
    dt: float | str = "auto"
    scheme: str = "explicit-euler"
    blow_up_threshold: float = 1e10
    decay_threshold: float = 1e-14
    boundary: str = "dirichlet-zero"
    boundary_mass_tolerance: float = 1e-8
    reaction_limit: float | None = 0.05
    reaction: bool = True
    confirm: bool = True
    record_every: int = 1
    keep_trajectory: bool = False
    stop_time: float | None = None
    max_halvings: int = 10
    metric: PseudoMetric | None = None
    x0: object = None

    def __post_init__(self):
        if not self.sigma > 1:
            raise ValueError("sigma must exceed 1")
        if self.scheme not in ("explicit-euler", "semi-implicit-linear"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.boundary != "dirichlet-zero":
            raise ValueError(f"unsupported boundary condition {self.boundary!r}")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if self.dt != "auto" and not float(self.dt) > 0:
            raise ValueError("dt must be positive or 'auto'")
        self.initial = np.asarray(self.initial, dtype=float)
        if np.any(self.initial < 0):
            raise ValueError("initial data must be nonnegative")


def stability_limit(g: Graph) -> float:
    """``max_x (sum_y omega_xy) / mu(x)``, counting edges cut by the window."""
    rate = (g.degree + g.missing_weight) / g.mu
    return float(rate.max()) if g.n else 0.0


def resolve_dt(g: Graph, config: SimConfig) -> float:
    if config.dt == "auto":
        lim = stability_limit(g)
        return 0.4 / lim if lim > 0 else 0.1
    return float(config.dt)


def space_values(g: Graph, config: SimConfig) -> np.ndarray:
    sp_ = config.potential.space
    dist = None
    if sp_.needs_distance:
        if config.metric is None or config.x0 is None:
            raise ValueError("distance-dependent potential needs metric and x0")
        dist = config.metric.from_vertex(config.x0)
    return sp_(dist, g.n)


def _jacobi(L, rhs, dt, tol=1e-12, max_iter=10_000):
    """Solve ``(I - dt L) x = rhs`` by Jacobi iteration."""
    diag = 1.0 - dt * L.diagonal()
    off = L.copy()
    off.setdiag(0.0)
    off.eliminate_zeros()
    x = rhs.copy()
    for _ in range(max_iter):
        nxt = (rhs + dt * (off @ x)) / diag
        if np.max(np.abs(nxt - x)) <= tol * max(1.0, np.max(np.abs(nxt))):
            return nxt
        x = nxt
    raise RuntimeError("Jacobi iteration did not converge")


def step(g: Graph, u, t: float, config: SimConfig, dt: float | None = None,
         gvals: np.ndarray | None = None) -> np.ndarray:
    """One time step from ``u`` at time ``t``.

    Explicit Euler: ``u + dt (Delta u + v u^sigma)``. Semi-implicit: the
    diffusion is taken implicitly, the reaction explicitly. Exterior values
    are zero on truncated windows.
    """
    dt = resolve_dt(g, config) if dt is None else dt
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise StepError("negative input to step")
    if gvals is None:
        gvals = space_values(g, config)
    L = g.dirichlet_matrix
    react = config.potential(t, gvals) * u ** config.sigma if config.reaction else 0.0
    if config.scheme == "explicit-euler":
        out = u + dt * (L @ u + react)
    else:
        out = _jacobi(L, u + dt * react, dt)
    if np.any(out < 0):
        raise StepError(f"negative value after step at t={t:.6g} with dt={dt:.3g}")
    return out


@dataclass
class BlowUpReport:
    outcome: str
    blow_up_time: float | None
    times: np.ndarray
    max_history: np.ndarray
    mass_history: np.ndarray
    boundary_history: np.ndarray
    boundary_contamination: float
    dt_used: float
    confirmed_time: float | None = None
    reason: str = ""
    trajectory: np.ndarray | None = None
    trajectory_times: np.ndarray | None = None

    def summary(self) -> dict:
        return {
            "outcome": self.outcome,
            "blow_up_time": self.blow_up_time,
            "confirmed_time": self.confirmed_time,
            "boundary_contamination": self.boundary_contamination,
            "dt_used": self.dt_used,
            "final_time": float(self.times[-1]),
            "final_sup": float(self.max_history[-1]),
            "reason": self.reason,
        }


def _integrate(g: Graph, config: SimConfig, dt: float) -> BlowUpReport:
    u = config.initial.copy()
    if u.shape != (g.n,):
        raise ValueError(f"initial data has shape {u.shape}, expected ({g.n},)")
    gvals = space_values(g, config)
    horizon = config.t_max if config.stop_time is None else min(config.t_max, config.stop_time)
    bmask = g.boundary if g.truncated else np.zeros(g.n, bool)
    t = 0.0
    times, sups, masses, bmax = [0.0], [u.max(initial=0.0)], [g.mu @ u], [u[bmask].max(initial=0.0)]
    traj = [u.copy()] if config.keep_trajectory else None
    traj_t = [0.0] if config.keep_trajectory else None
    outcome, blow_time, reason = None, None, ""
    contamination = 0.0
    n = 0
    while t < horizon - 1e-12 * horizon:
        sup = u.max(initial=0.0)
        h = min(dt, horizon - t)
        if config.reaction and config.reaction_limit is not None and sup > 0:
            rate = float((config.potential(t, gvals) * u ** (config.sigma - 1)).max())
            if rate > 0:
                h = min(h, config.reaction_limit / rate)
        u = step(g, u, t, config, h, gvals)
        t += h
        n += 1
        sup = u.max(initial=0.0)
        bnd = u[bmask].max(initial=0.0)
        if n % config.record_every == 0 or sup >= config.blow_up_threshold:
            times.append(t)
            sups.append(sup)
            masses.append(float(g.mu @ u) if np.isfinite(sup) else np.inf)
            bmax.append(bnd)
            if traj is not None:
                traj.append(u.copy())
                traj_t.append(t)
        if sup > 0:
            contamination = max(contamination, bnd / sup)
        if bnd > config.boundary_mass_tolerance * sup and bnd > 0:
            outcome, reason = UNDECIDED, "boundary contamination"
            break
        if sup >= config.blow_up_threshold or not np.isfinite(sup):
            outcome, blow_time = BLOW_UP, t
            break
        if sup < config.decay_threshold:
            outcome, reason = GLOBAL_DECAY, "below decay threshold"
            break
    sups_arr = np.asarray(sups)
    if outcome is None:
        if config.stop_time is not None and config.stop_time < config.t_max:
            outcome, reason = UNDECIDED, "stopped early"
        else:
            tail = sups_arr[len(sups_arr) // 2:]
            if tail.size < 2 or np.all(np.diff(tail) <= 1e-12 * tail[:-1]):
                outcome, reason = GLOBAL_DECAY, "sup-norm non-increasing over second half"
            else:
                outcome, reason = UNDECIDED, "no blow-up but sup-norm not decaying"
    return BlowUpReport(outcome, blow_time, np.asarray(times), sups_arr, np.asarray(masses),
                        np.asarray(bmax), contamination, dt,
                        reason=reason,
                        trajectory=None if traj is None else np.asarray(traj),
                        trajectory_times=None if traj_t is None else np.asarray(traj_t))


def run(g: Graph, config: SimConfig) -> BlowUpReport:
    """Integrate to ``t_max`` or the blow-up threshold and classify the run.

    A blow-up is only reported when a re-run with half the step crosses the
    threshold within 10% of the same time; otherwise the run is undecided.
    Negative values trigger up to ``max_halvings`` step reductions.
    """
    dt = resolve_dt(g, config)
    for _ in range(config.max_halvings + 1):
        try:
            report = _integrate(g, config, dt)
            break
        except StepError as exc:
            log.info("step failed (%s); halving dt", exc)
            dt /= 2
    else:
        raise StepError(f"positivity lost even with dt={dt:.3g}")
    if report.outcome == BLOW_UP and config.confirm:
        half = replace(config, confirm=False, keep_trajectory=False,
                       reaction_limit=None if config.reaction_limit is None
                       else config.reaction_limit / 2)
        check = _integrate(g, half, dt / 2)
        report.confirmed_time = check.blow_up_time
        if check.outcome != BLOW_UP or abs(check.blow_up_time - report.blow_up_time) > 0.1 * report.blow_up_time:
            report.outcome = UNDECIDED
            report.reason = "blow-up not confirmed at dt/2"
        else:
            report.reason = "blow-up confirmed at dt/2"
    return report


# --- sweeps --------------------------------------------------------------------------

@dataclass
class SweepResult:
    rows: list  # (sigma, amplitude, outcome, blow_up_time)
    summary: dict


def _sweep_task(args):
    g, config = args
    rep = run(g, config)
    return rep.outcome, rep.blow_up_time


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("GRAPHBLOWUP_THREADS", "1")))
    except ValueError:
        return 1


def fujita_sweep(g: Graph, sigma_list: Sequence[float], amplitude_list: Sequence[float],
                 base_config: SimConfig, workers: int | None = None) -> SweepResult:
    """Classify runs over a grid of exponents and data sizes.

    Initial data are ``amplitude * profile`` with ``profile`` the base
    initial data normalised to unit sup-norm. Rows come back in parameter
    order whatever the completion order.
    """
    profile = base_config.initial
    peak = profile.max(initial=0.0)
    if peak <= 0:
        raise ValueError("sweep needs a nonzero initial profile")
    profile = profile / peak
    grid = [(float(s), float(a)) for s in sigma_list for a in amplitude_list]
    tasks = [(g, replace(base_config, sigma=s, initial=a * profile)) for s, a in grid]
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_task, tasks))
    else:
        results = [_sweep_task(t) for t in tasks]
    rows = [(s, a, out, bt) for (s, a), (out, bt) in zip(grid, results)]

    smallest = min(amplitude_list)
    survived = sorted(s for s, a, out, _ in rows if a == smallest and out == GLOBAL_DECAY)
    blown = sorted(s for s, a, out, _ in rows if a == smallest and out == BLOW_UP)
    first_survivor = survived[0] if survived else None
    below = [s for s in blown if first_survivor is None or s < first_survivor]
    summary = {
        "smallest_amplitude": float(smallest),
        "first_surviving_sigma": first_survivor,
        "last_blow_up_sigma_below": below[-1] if below else None,
        "critical_bracket": [below[-1] if below else None, first_survivor],
    }
    return SweepResult(rows, summary)
