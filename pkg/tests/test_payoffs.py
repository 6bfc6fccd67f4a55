import math

import numpy as np
import pytest

from deterrence.exceptions import AssumptionError, DivergenceError
from deterrence.grids import StateGrid, TimeGrid
from deterrence.model import CklsParams, simulate_paths
from deterrence.payoffs import (FLOW, LUMP_SUM, MarketPrimitives, check_assumptions,
                                check_discount_bound, continuation_value, entrant_payoff_mc,
                                entrant_payoff_samples, incumbent_payoff_mc)
from deterrence.stopping import ABOVE, StoppingRule, stopping_steps

from oracles import discounted_integral, ode_path

ODE = CklsParams(0.5, -1.0, 0.0, 0.5)
NOISY = CklsParams(0.5, -1.0, 0.3, 0.5)
SG = StateGrid.uniform(0.05, 3.0, 60)


def always(tg):
    return StoppingRule.from_stop_set(ABOVE, np.ones((tg.n_steps + 1, SG.nodes.size), bool), tg, SG)[0]


def test_assumption_examples(market):
    assert check_assumptions(market) is market
    with pytest.raises(AssumptionError, match="M_w > Q violated"):
        check_assumptions(MarketPrimitives(1.0, 0.9, 0.4, 0.5, 0.2, 1.0))
    with pytest.raises(AssumptionError, match="Q > D_E_w violated"):
        check_assumptions(MarketPrimitives(1.0, 1.5, 0.4, 1.2, 0.2, 1.0))
    with pytest.raises(AssumptionError, match="D_E_w > 0 violated"):
        check_assumptions(MarketPrimitives(1.0, 1.5, 0.4, -0.1, 0.2, 1.0))


def test_assumption_error_lists_all():
    with pytest.raises(AssumptionError) as info:
        check_assumptions(MarketPrimitives(1.0, 0.9, 0.4, 1.2, 0.2, 1.0))
    assert "M_w > Q violated" in str(info.value) and "Q > D_E_w violated" in str(info.value)
    assert info.value.exit_code == 2


def test_discount_bound():
    assert check_discount_bound(1.0, 0, 0, ODE, 1.0)  # drift -0.5
    assert not check_discount_bound(1.0, 0, 0, CklsParams(2.5, -1.0, 0.0, 0.5), 1.0)
    assert check_discount_bound(1.0, 0, 0, CklsParams(2.0, -1.0, 0.0, 0.5), 1.0)


def test_continuation_value():
    assert continuation_value(1.0, 0, 0, 0.4, ODE, 1.0) == pytest.approx(0.4 / 1.5)
    assert continuation_value(0.0, 0, 0, 0.4, ODE, 1.0) == 0.0
    with pytest.raises(DivergenceError) as info:
        continuation_value(1.0, 0, 0, 0.4, CklsParams(2.0, -1.0, 0.0, 0.5), 1.0)
    assert info.value.exit_code == 4


def test_incumbent_zero_when_control_equals_q():
    tg = TimeGrid(1.0, 50)
    m = MarketPrimitives(1.0, 1.5, 0.0, 0.5, 0.2, 1.0)
    ens = simulate_paths(NOISY, 1.0, None, tg, 1.0, 200, seed=2)
    est = incumbent_payoff_mc(ens, StoppingRule.never(tg, SG), m, NOISY, tg)
    assert est.estimate == 0.0 and est.std_error == 0.0


@pytest.mark.parametrize("reveal", [False, True])
def test_incumbent_matches_quadrature(market, reveal):
    tg = TimeGrid(1.0, 5000)
    ens = simulate_paths(ODE, None, None, tg, 1.0, 2, seed=0)
    rule = always(tg) if reveal else StoppingRule.never(tg, SG)
    got = incumbent_payoff_mc(ens, rule, market, ODE, tg).estimate
    coeff = market.M_w - market.u3_bar if reveal else market.Q
    xt = ode_path(1.0, ODE, 1.0)
    oracle = (coeff * discounted_integral(1.0, ODE, 1.0, 0.0, 1.0)
              + math.exp(-1.0) * market.D_I_w * xt / (1.0 - (0.5 - xt)))
    assert got == pytest.approx(oracle, rel=1e-3)


def test_incumbent_monotone_in_control_without_drift_effect(market):
    p = CklsParams(0.5, -1.0, 0.3, 0.5, 0.0, 0.0)
    tg = TimeGrid(1.0, 40)
    vals = []
    for u in (0.0, 0.25, 0.5, 1.0):
        ens = simulate_paths(p, u, None, tg, 1.0, 2000, seed=5)
        vals.append(incumbent_payoff_mc(ens, StoppingRule.never(tg, SG), market, p, tg).estimate)
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_standard_error_scaling(market):
    tg = TimeGrid(1.0, 20)
    se = []
    for n in (4000, 16000):
        ens = simulate_paths(NOISY, None, None, tg, 1.0, n, seed=9)
        se.append(incumbent_payoff_mc(ens, StoppingRule.never(tg, SG), market, NOISY, tg).std_error)
    assert se[0] / se[1] == pytest.approx(2.0, rel=0.1)


def test_entrant_against_strong_pays_discounted_fee(market):
    tg = TimeGrid(1.0, 40)
    rule = StoppingRule(ABOVE, tg, SG, np.full(41, 1.1))
    ens = simulate_paths(NOISY, None, None, tg, 1.0, 3000, seed=4)
    got = entrant_payoff_samples(ens, rule, "q", market, NOISY, tg)
    tau = stopping_steps(rule, tg.times, ens.states, seed=ens.seed)
    entered = tau <= tg.n_steps
    assert entered.any() and (~entered).any()
    expect = np.where(entered, -market.F * np.exp(-market.gamma * tg.times[np.minimum(tau, 40)]), 0.0)
    assert np.array_equal(got, expect)
    assert np.all(got <= 0)


@pytest.mark.parametrize("theta", ["q", "w"])
@pytest.mark.parametrize("form", [LUMP_SUM, FLOW])
def test_entrant_never_enter_is_zero(market, theta, form):
    tg = TimeGrid(1.0, 20)
    ens = simulate_paths(NOISY, None, None, tg, 1.0, 100, seed=1)
    est = entrant_payoff_mc(ens, StoppingRule.never(tg, SG), theta, market, NOISY, tg, form)
    assert est.estimate == 0.0


def test_entrant_flow_matches_quadrature(market):
    tg = TimeGrid(1.0, 5000)
    ens = simulate_paths(ODE, None, None, tg, 1.0, 1, seed=0)
    got = entrant_payoff_mc(ens, always(tg), "w", market, ODE, tg, FLOW).estimate
    oracle = market.D_E_w * discounted_integral(1.0, ODE, 1.0, 0.0, 1.0) - market.F
    assert got == pytest.approx(oracle, rel=1e-3)


def test_lump_sum_and_flow_agree_on_constant_paths(market):
    p = CklsParams(0.0, 0.0, 0.0, 0.5)
    tg = TimeGrid(30.0, 30000)
    ens = simulate_paths(p, None, None, tg, 1.7, 1, seed=0)
    flow = entrant_payoff_mc(ens, always(tg), "w", market, p, tg, FLOW).estimate
    lump = entrant_payoff_mc(ens, always(tg), "w", market, p, tg, LUMP_SUM).estimate
    assert lump == pytest.approx(market.D_E_w * 1.7 / market.gamma - market.F)
    assert flow == pytest.approx(lump, rel=1e-3)
