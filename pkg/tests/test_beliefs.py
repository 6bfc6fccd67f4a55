import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from deterrence.beliefs import BeliefState, belief_update, logit, posterior_prob
from deterrence.exceptions import DomainError
from deterrence.model import CklsParams, drift

P = CklsParams(0.5, -1.0, 0.3, 0.5)


def test_logit_examples():
    assert logit(0.5) == 0.0
    assert logit(0.75) == pytest.approx(math.log(3), abs=1e-12)


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.2, 1.5, float("nan")])
def test_logit_domain(bad):
    with pytest.raises(DomainError):
        logit(bad)


def test_posterior_examples():
    assert posterior_prob(0.0) == 0.5
    assert posterior_prob(math.log(3)) == pytest.approx(0.75, abs=1e-15)
    with np.errstate(all="raise"):
        tiny = posterior_prob(-700.0)
    assert 0.0 < tiny < 1e-300
    assert posterior_prob(700.0) <= 1.0


def test_round_trip_vectorized():
    p = np.linspace(1e-6, 1 - 1e-6, 10_001)
    assert np.max(np.abs(posterior_prob(logit(p)) - p) / p) <= 1e-12


def test_belief_state():
    b = BeliefState.from_prob(0.75)
    assert b.z == pytest.approx(math.log(3))
    assert b.p == pytest.approx(0.75)


def test_belief_update_examples():
    assert belief_update(1.3, 1.3, 0.42, 0.1, 0.2, P) == 0.42
    assert belief_update(1.2, 1.0, 0.0, 0.0, 0.0, P) == pytest.approx(-2.592593, abs=1e-6)
    with pytest.raises(DomainError):
        belief_update(0.0, 1.0, 0.0, 0.0, 0.0, P)


@settings(max_examples=200, deadline=None)
@given(xs=st.floats(0.05, 5), x0=st.floats(0.05, 5), z0=st.floats(-5, 5), dz=st.floats(-5, 5))
def test_belief_update_linear_in_z0_and_sign(xs, x0, z0, dz):
    a = belief_update(xs, x0, z0, 0.0, 0.0, P)
    b = belief_update(xs, x0, z0 + dz, 0.0, 0.0, P)
    assert b - a == pytest.approx(dz, abs=1e-9)
    assert np.sign(round(a - z0, 12)) == np.sign(round(drift(xs, 0, 0, P) * (xs - x0), 12))


def test_belief_update_affine_in_displacement():
    # with the state-dependent coefficient frozen at x_s, the update is linear in x_s - x0
    xs = 1.5
    step = [belief_update(xs, xs - d, 0.0, 0.0, 0.0, P) for d in (0.1, 0.2, 0.4)]
    assert step[1] == pytest.approx(2 * step[0])
    assert step[2] == pytest.approx(4 * step[0])
