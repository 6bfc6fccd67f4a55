import numpy as np
import pytest

from deterrence.grids import ControlGrid, Grids, StateGrid, TimeGrid
from deterrence.model import CklsParams
from deterrence.payoffs import MarketPrimitives

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def example_params():
    """Parameter set used throughout the worked examples."""
    return CklsParams(0.5, -1.0, 0.3, 0.5, 0.1, 0.1)


@pytest.fixture
def market():
    return MarketPrimitives(Q=1.0, M_w=1.5, D_I_w=0.4, D_E_w=0.5, F=0.2, gamma=1.0)


# Desk-scale reference instance for the solvers and the game.
REF_PARAMS = CklsParams(0.3, -0.2, 0.3, 0.5, 0.2, 0.5)
REF_MARKET = MarketPrimitives(Q=1.0, M_w=1.5, D_I_w=0.4, D_E_w=0.5, F=0.8, gamma=1.0,
                              u3_bar=0.0, p0=0.5)
REF_X0 = 2.0


def reference_grids():
    return Grids(TimeGrid(1.0, 40), StateGrid.uniform(0.3, 4.0, 80),
                 ControlGrid(np.linspace(0.0, 1.0, 5)))


@pytest.fixture
def ref():
    return REF_PARAMS, REF_MARKET, reference_grids()


# Tiny instance: 3 steps x 5 nodes x 2 controls, inside both the kernel
# resolution bound and the explicit CFL bound.
TINY_PARAMS = CklsParams(0.1, -0.1, 0.2, 0.5, 0.2, 0.0)


def tiny_grids(n_steps=3):
    return Grids(TimeGrid(0.1 * n_steps, n_steps), StateGrid.uniform(1.0, 1.4, 5),
                 ControlGrid([0.0, 1.0]))


def tiny_reward(x, u):
    return x + 3.0 * u * (x - 1.15)


@pytest.fixture
def tiny():
    return TINY_PARAMS, tiny_grids()
