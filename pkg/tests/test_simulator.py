import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from _graphs import random_graph
from graphblowup import Graph, Potential, TimeProfile, cyclic_power, lattice
from graphblowup.simulator import (BLOW_UP, GLOBAL_DECAY, UNDECIDED, SimConfig, StepError,
                                   _jacobi, fujita_sweep, resolve_dt, run, stability_limit, step)


def single_vertex():
    return Graph(["x"], [1.0], sp.csr_matrix((1, 1)))


def test_step_examples():
    g = single_vertex()
    cfg = SimConfig(sigma=2, initial=[1.0], t_max=1.0)
    assert step(g, np.array([1.0]), 0.0, cfg, dt=0.1)[0] == pytest.approx(1.1, abs=1e-15)
    z = cyclic_power(5, 1)[0]
    cfg = SimConfig(sigma=2, initial=np.zeros(5), t_max=1.0)
    assert np.all(step(z, np.zeros(5), 0.0, cfg) == 0.0)


def test_step_rejects_negative_input():
    g = single_vertex()
    cfg = SimConfig(sigma=2, initial=[1.0], t_max=1.0)
    with pytest.raises(StepError):
        step(g, np.array([-1.0]), 0.0, cfg, dt=0.1)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_pure_diffusion_conserves_mass(seed):
    g = random_graph(30, seed=seed)
    u = np.random.default_rng(seed).random(g.n)
    cfg = SimConfig(sigma=2, initial=u, t_max=1.0, reaction=False)
    dt = resolve_dt(g, cfg)
    for k in range(20):
        nxt = step(g, u, k * dt, cfg)
        assert abs(g.mu @ nxt - g.mu @ u) <= 1e-12 * (g.mu @ u)
        u = nxt


def test_auto_dt_is_within_stability_limit():
    for g in (lattice(2, 5).graph, random_graph(40, seed=3), cyclic_power(3, 2)[0]):
        cfg = SimConfig(sigma=2, initial=np.zeros(g.n), t_max=1.0)
        assert resolve_dt(g, cfg) * stability_limit(g) <= 0.5


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_positivity_and_monotonicity_in_data(seed):
    g = random_graph(25, seed=seed)
    rng = np.random.default_rng(seed)
    u = 0.1 * rng.random(g.n)
    w = u + 0.1 * rng.random(g.n)
    cfg = SimConfig(sigma=2.5, initial=u, t_max=1.0)
    for k in range(30):
        u, w = step(g, u, 0.0, cfg), step(g, w, 0.0, cfg)
        assert np.all(u >= 0) and np.all(u <= w)


def test_semi_implicit_solver_accuracy():
    g = random_graph(30, seed=1)
    rhs = np.random.default_rng(1).random(g.n)
    x = _jacobi(g.dirichlet_matrix, rhs, 0.3)
    A = sp.identity(g.n) - 0.3 * g.dirichlet_matrix
    assert np.abs(A @ x - rhs).max() <= 1e-11


def test_semi_implicit_agrees_with_explicit_for_small_steps():
    lat = lattice(1, 30)
    u0 = 0.2 * (np.abs(lat.graph.coords[:, 0]) <= 3)
    out = {}
    for scheme in ("explicit-euler", "semi-implicit-linear"):
        cfg = SimConfig(sigma=2, initial=u0, t_max=2.0, dt=0.01, scheme=scheme,
                        reaction_limit=None, keep_trajectory=True)
        out[scheme] = run(lat.graph, cfg).trajectory[-1]
    np.testing.assert_allclose(out["explicit-euler"], out["semi-implicit-linear"],
                               atol=2e-3 * u0.max())


def test_finite_graph_blows_up():
    g, _ = cyclic_power(5, 1)
    rep = run(g, SimConfig(sigma=2, initial=np.full(5, 0.01), t_max=1e4))
    assert rep.outcome == BLOW_UP
    # spatially constant data follow u' = u^2 exactly: T = 1/u0
    assert rep.blow_up_time == pytest.approx(100.0, rel=0.02)
    assert abs(rep.confirmed_time - rep.blow_up_time) <= 0.1 * rep.blow_up_time


def test_zero_data_decays():
    g, _ = cyclic_power(5, 1)
    rep = run(g, SimConfig(sigma=2, initial=np.zeros(5), t_max=10.0))
    assert rep.outcome == GLOBAL_DECAY and rep.max_history.max() == 0.0


def test_large_step_is_halved():
    g, _ = cyclic_power(5, 1)
    u0 = np.array([1.0, 0, 0, 0, 0])
    rep = run(g, SimConfig(sigma=2, initial=u0, t_max=10.0, dt=1.5, reaction=False))
    assert rep.dt_used < 1.5


def test_boundary_contamination_is_undecided():
    lat = lattice(1, 10)
    u0 = 0.01 * (np.abs(lat.graph.coords[:, 0]) <= 2)
    rep = run(lat.graph, SimConfig(sigma=2, initial=u0, t_max=200.0))
    assert rep.outcome == UNDECIDED and "boundary" in rep.reason


def test_dt_refinement_is_first_order():
    lat = lattice(1, 60)
    u0 = 0.05 * (np.abs(lat.graph.coords[:, 0]) <= 3)
    sups = []
    for dt in (0.2, 0.1, 0.05):
        cfg = SimConfig(sigma=2, initial=u0, t_max=8.0, dt=dt, reaction_limit=None,
                        keep_trajectory=True)
        sups.append(run(lat.graph, cfg).trajectory[-1].max())
    ratio = (sups[0] - sups[1]) / (sups[1] - sups[2])
    assert 1.5 <= ratio <= 2.5


def test_blow_up_time_non_increasing_in_amplitude():
    g, _ = cyclic_power(3, 2)
    base = SimConfig(sigma=2, initial=np.full(g.n, 1.0), t_max=1e4, confirm=False)
    res = fujita_sweep(g, [2.0], [0.02, 0.05, 0.1, 0.3], base)
    times = [r[3] for r in res.rows]
    assert all(r[2] == BLOW_UP for r in res.rows)
    assert all(a >= b for a, b in zip(times, times[1:]))


def test_sweep_finite_graph_all_blow_up():
    g, _ = cyclic_power(5, 1)
    base = SimConfig(sigma=2, initial=np.ones(5), t_max=1e4)
    res = fujita_sweep(g, [1.5, 2.0, 3.0, 4.0], [0.1, 0.5], base)
    assert len(res.rows) == 8
    assert all(out == BLOW_UP for _, _, out, _ in res.rows)
    assert res.summary["first_surviving_sigma"] is None


def test_sweep_order_independent_of_workers():
    g, _ = cyclic_power(5, 1)
    base = SimConfig(sigma=2, initial=np.ones(5), t_max=500.0, confirm=False)
    serial = fujita_sweep(g, [1.5, 3.0], [0.05, 0.2], base, workers=1)
    parallel = fujita_sweep(g, [1.5, 3.0], [0.05, 0.2], base, workers=2)
    assert serial.rows == parallel.rows


def test_time_dependent_potential_matches_ode():
    # u' = e^t u^2, u(0) = a  =>  1/a - 1/u = e^t - 1, blow-up at log(1 + 1/a)
    g = single_vertex()
    pot = Potential(TimeProfile("exponential", rate=1.0))
    rep = run(g, SimConfig(sigma=2, initial=[0.5], t_max=10.0, potential=pot,
                           reaction_limit=0.01))
    assert rep.outcome == BLOW_UP
    assert rep.blow_up_time == pytest.approx(np.log(3.0), rel=0.01)


def test_config_validation():
    with pytest.raises(ValueError, match="sigma must exceed 1"):
        SimConfig(sigma=1.0, initial=[1.0], t_max=1.0)
    with pytest.raises(ValueError, match="nonnegative"):
        SimConfig(sigma=2, initial=[-1.0], t_max=1.0)
    with pytest.raises(ValueError):
        SimConfig(sigma=2, initial=[1.0], t_max=1.0, scheme="rk4")
