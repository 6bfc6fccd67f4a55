import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from deterrence.exceptions import DomainError
from deterrence.grids import FeedbackPolicy, StateGrid, TimeGrid
from deterrence.model import (CklsParams, diffusion, drift, mean_ode, simulate_paths,
                              step_euler, validate_params)

P = CklsParams(0.5, -1.0, 0.3, 0.5, 0.1, 0.1)


def test_validate_accepts_example():
    assert validate_params(P) is P


@pytest.mark.parametrize("kw, field", [
    ({"alpha3": -0.1}, "alpha3"),
    ({"alpha4": 2.0}, "alpha4"),
    ({"alpha4": 0.4}, "alpha4"),
    ({"alpha1": float("nan")}, "alpha1"),
    ({"theta2": float("inf")}, "theta2"),
])
def test_validate_names_field(kw, field):
    bad = CklsParams(**{**P.__dict__, **kw})
    with pytest.raises(DomainError, match=field) as info:
        validate_params(bad)
    assert info.value.field == field


def test_drift_examples():
    assert drift(1.0, 0.0, 0.0, P) == pytest.approx(-0.5)
    assert drift(0.0, 0.0, 0.0, P) == pytest.approx(0.5)
    assert drift(1.0, 2.0, 0.0, P) == pytest.approx(-0.3)


def test_diffusion_examples():
    assert diffusion(4.0, P) == pytest.approx(0.6)
    assert diffusion(0.0, P) == 0.0
    assert diffusion(1.0, CklsParams(0.5, -1.0, 0.3, 1.5)) == pytest.approx(0.3)


def test_step_euler_examples():
    assert step_euler(1.0, 0.0, 0.0, 0.1, 0.0, P) == pytest.approx(0.95)
    assert step_euler(0.0, 0.0, 0.0, 0.1, 3.7, P) == pytest.approx(0.05)
    assert step_euler(0.01, 0.0, 0.0, 0.1, -50.0, P) == 0.0


@settings(max_examples=200, deadline=None)
@given(x=st.floats(0, 50), noise=st.floats(-40, 40), dt=st.floats(1e-4, 1.0),
       a1=st.floats(-2, 2), a2=st.floats(-2, 2), a3=st.floats(0, 3), a4=st.floats(0.5, 1.5))
def test_step_euler_never_negative(x, noise, dt, a1, a2, a3, a4):
    p = CklsParams(a1, a2, a3, a4)
    assert step_euler(x, 0.0, 0.0, dt, noise, p) >= 0.0


def test_zero_noise_matches_explicit_euler_recurrence():
    p = CklsParams(0.5, -1.0, 0.0, 0.5)
    grid = TimeGrid(1.0, 200)
    a = simulate_paths(p, None, None, grid, 1.0, 5, seed=1)
    b = simulate_paths(p, None, None, grid, 1.0, 5, seed=999)
    x = 1.0
    for _ in range(200):
        x = x + (0.5 - x) * grid.dt
    assert np.all(a.states[:, -1] == x)
    assert np.array_equal(a.states, b.states)


def test_zero_noise_converges_to_ode():
    p = CklsParams(0.5, -1.0, 0.0, 0.5)
    ens = simulate_paths(p, None, None, TimeGrid(1.0, 200_000), 1.0, 1, seed=0)
    target = 0.5 + 0.5 * math.exp(-1.0)
    assert target == pytest.approx(0.683940, abs=1e-6)
    assert ens.states[0, -1] == pytest.approx(target, abs=1e-6)


def test_mean_consistency_small():
    p = CklsParams(0.5, -1.0, 0.3, 0.5)
    ens = simulate_paths(p, None, None, TimeGrid(1.0, 100), 1.0, 20_000, seed=3)
    xt = ens.states[:, -1]
    se = xt.std(ddof=1) / math.sqrt(xt.size)
    assert abs(xt.mean() - mean_ode(1.0, 1.0, p)) < 3 * se + 0.5 * 0.5 * math.exp(-1) * 0.01


def test_ensemble_invariants_and_controls():
    tg = TimeGrid(1.0, 50)
    sg = StateGrid.uniform(0.0, 3.0, 31)
    pol = FeedbackPolicy(tg, sg, np.tile(np.where(sg.nodes > 1.0, 1.0, 0.0), (51, 1)))
    ens = simulate_paths(P, pol, 0.25, tg, 1.0, 300, seed=11)
    assert np.all(ens.states[:, 0] == 1.0)
    assert np.all(ens.states >= 0)
    assert ens.controls_u1.shape == (300, 50)
    assert set(np.unique(ens.controls_u1)) <= {0.0, 1.0}
    assert np.all(ens.controls_u2 == 0.25)
    # control follows the clamped nearest node of the state at each step
    expect = pol.lookup(ens.times[:-1][None, :], ens.states[:, :-1])
    assert np.array_equal(ens.controls_u1, expect)
    with pytest.raises(ValueError):
        ens.states[0, 0] = 2.0


def test_seed_determinism_and_thread_independence():
    p = CklsParams(0.5, -1.0, 0.3, 0.5)
    tg = TimeGrid(1.0, 20)
    a = simulate_paths(p, None, None, tg, 1.0, 10_000, seed=42, threads=1)
    b = simulate_paths(p, None, None, tg, 1.0, 10_000, seed=42, threads=8)
    c = simulate_paths(p, None, None, tg, 1.0, 10_000, seed=43, threads=1)
    assert np.array_equal(a.states, b.states)
    assert not np.array_equal(a.states, c.states)
    # a path does not depend on how many other paths are simulated
    d = simulate_paths(p, None, None, tg, 1.0, 7, seed=42)
    assert np.array_equal(d.states, a.states[:7])


@pytest.mark.parametrize("kw", [{"x0": 0.0}, {"n_paths": 0}, {"n_paths": 2.5}])
def test_simulate_rejects_bad_input(kw):
    args = dict(x0=1.0, n_paths=3)
    args.update(kw)
    with pytest.raises(DomainError):
        simulate_paths(P, None, None, TimeGrid(1.0, 4), args["x0"], args["n_paths"], seed=0)


def test_time_grid_errors():
    with pytest.raises(DomainError):
        TimeGrid(1.0, 0)
    with pytest.raises(DomainError):
        TimeGrid(0.0, 3)
