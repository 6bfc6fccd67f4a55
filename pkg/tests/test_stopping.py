import numpy as np
import pytest

from deterrence.exceptions import DomainError
from deterrence.grids import StateGrid, TimeGrid
from deterrence.stopping import (ABOVE, BELOW, StoppingRule, above_sentinel, apply_mixing,
                                 below_sentinel, stopping_steps)

TG = TimeGrid(1.0, 4)
SG = StateGrid.uniform(1.0, 2.0, 5)


def test_from_stop_set_thresholds():
    stop = np.zeros((5, 5), bool)
    stop[:, 3:] = True
    stop[4, :] = True
    rule, regular = StoppingRule.from_stop_set(ABOVE, stop, TG, SG)
    assert regular and rule.mask is None
    assert rule.thresholds[0] == pytest.approx(1.625)
    assert rule.thresholds[4] == below_sentinel(SG)
    assert np.array_equal(rule.node_stop_set(), stop)


def test_from_stop_set_below_and_empty():
    stop = np.zeros((5, 5), bool)
    stop[1, :2] = True
    rule, regular = StoppingRule.from_stop_set(BELOW, stop, TG, SG)
    assert regular
    assert rule.thresholds[0] == below_sentinel(SG)
    assert rule.thresholds[1] == pytest.approx(1.375)
    assert np.array_equal(rule.node_stop_set(), stop)
    never, ok = StoppingRule.from_stop_set(BELOW, np.zeros((5, 5), bool), TG, SG)
    assert ok and never.kind == "never"


def test_irregular_set_keeps_mask():
    stop = np.zeros((5, 5), bool)
    stop[2, [1, 3]] = True
    rule, regular = StoppingRule.from_stop_set(ABOVE, stop, TG, SG)
    assert not regular
    assert np.array_equal(rule.node_stop_set(), stop)
    assert rule.in_region(0.5, 1.5) == False  # noqa: E712
    assert rule.in_region(0.5, 1.74) == True  # noqa: E712


def test_in_region_clamps_to_grid():
    rule = StoppingRule(ABOVE, TG, SG, np.full(5, 1.9))
    assert rule.in_region(0.0, 50.0)
    low = StoppingRule(BELOW, TG, SG, np.full(5, 1.1))
    assert low.in_region(0.0, 1e-9)
    never = StoppingRule.never(TG, SG)
    assert not never.in_region(0.0, 1e6)
    assert above_sentinel(SG) > SG.nodes[-1]


def test_rule_validation():
    with pytest.raises(DomainError):
        StoppingRule("sideways", TG, SG, np.zeros(5))
    with pytest.raises(DomainError):
        StoppingRule(ABOVE, TG, SG, np.zeros(4))
    with pytest.raises(DomainError):
        StoppingRule(ABOVE, TG, SG, np.array([0, 0, np.inf, 0, 0]))
    with pytest.raises(DomainError):
        StoppingRule(ABOVE, TG, SG, np.zeros(5), hazard=-1)


def test_apply_mixing_kind_check():
    with pytest.raises(DomainError, match="kind|threshold-below"):
        apply_mixing(StoppingRule(ABOVE, TG, SG, np.zeros(5)), 1.0)
    with pytest.raises(DomainError):
        apply_mixing(StoppingRule(BELOW, TG, SG, np.zeros(5)), -0.5)


def test_stopping_steps_pure():
    rule = StoppingRule(BELOW, TG, SG, np.full(5, 1.3))
    states = np.array([[1.5, 1.2, 1.0, 1.6, 1.6],
                       [1.5, 1.5, 1.5, 1.5, 1.5],
                       [1.0, 1.0, 1.0, 1.0, 1.0]])
    assert stopping_steps(rule, TG.times, states).tolist() == [1, 5, 0]


def test_zero_hazard_reproduces_pure_rule():
    tg = TimeGrid(1.0, 50)
    rng = np.random.default_rng(0)
    states = 1.5 + np.cumsum(rng.normal(0, 0.05, (500, 51)), axis=1)
    pure = StoppingRule(BELOW, tg, SG, np.full(51, 1.4))
    mixed = apply_mixing(pure, 0.0)
    assert np.array_equal(stopping_steps(pure, tg.times, states, seed=3),
                          stopping_steps(mixed, tg.times, states, seed=3))


def test_large_hazard_saturates():
    tg = TimeGrid(1.0, 100)
    rule = apply_mixing(StoppingRule(BELOW, tg, SG, np.full(101, 1.5)), 1e3)
    states = np.full((20_000, 101), 1.2)
    steps = stopping_steps(rule, tg.times, states, seed=1)
    assert np.mean(steps == 0) >= 1 - np.exp(-10) - 1e-3


def test_mixed_steps_deterministic_across_threads():
    tg = TimeGrid(1.0, 100)
    rule = apply_mixing(StoppingRule(BELOW, tg, SG, np.full(101, 1.5)), 2.0)
    states = np.full((9000, 101), 1.2)
    a = stopping_steps(rule, tg.times, states, seed=7, threads=1)
    b = stopping_steps(rule, tg.times, states, seed=7, threads=8)
    assert np.array_equal(a, b)
    assert 0 < np.mean(a == 101) < 1
