"""Path-integral control on a (time x state) grid.

Each subinterval of the time partition carries an Onsager-Machlup
Lagrangian; exponentiating the negative kinetic part of the Euclidean action
gives the Gaussian Euler propagator (the imaginary-time, heat-kernel form of
the Schrödinger-type equation).  Value functions are propagated backward
with that kernel integrated over the Riemann cell of every state node, and
the feedback control is the maximizer over a finite control grid.
"""
import numpy as np
from scipy.special import ndtr

from .exceptions import DomainError, ResolutionError
from .grids import FeedbackPolicy, TimeGrid, ValueSurface
from .model import diffusion, drift
from .payoffs import continuation_value

TIE_RTOL = 1e-12


def build_partition(t, n):
    return TimeGrid(t, n)


def lagrangian_increment(x, x_next, u, dt, running_reward, p, u2=0.0):
    """Action of one subinterval: kinetic deviation cost minus reward.

    With zero diffusion the path is deterministic: the kinetic term is 0 on
    the drift step and ``inf`` anywhere else.
    """
    if not dt > 0:
        raise DomainError("dt must be positive", "dt")
    dev = x_next - x - drift(x, u, u2, p) * dt
    var = diffusion(x, p) ** 2
    if var > 0:
        kinetic = dev * dev / (2.0 * var * dt)
    else:
        kinetic = 0.0 if abs(dev) <= 1e-12 * max(1.0, abs(x)) else np.inf
    return kinetic - running_reward * dt


def euclidean_action(path, controls, grid, m, p, running_reward=None, u2=0.0):
    """Discretized Euclidean action of a state path under given controls.

    ``running_reward(x, u)`` defaults to the incumbent's signaling flow
    ``(Q - u) x``; rewards are discounted by ``exp(-gamma s)``.
    """
    path = np.asarray(path, dtype=float)
    controls = np.broadcast_to(np.asarray(controls, dtype=float), (grid.n_steps,))
    if path.shape != (grid.n_steps + 1,):
        raise DomainError("path must have n_steps + 1 states", "path")
    if running_reward is None:
        running_reward = lambda x, u: (m.Q - u) * x  # noqa: E731
    total = 0.0
    for k, s in enumerate(grid.times[:-1]):
        r = np.exp(-m.gamma * s) * running_reward(path[k], controls[k])
        total += lagrangian_increment(path[k], path[k + 1], controls[k], grid.dt, r, p, u2)
    return total


def transition_matrix(state_grid, mean, std):
    """Gaussian kernel integrated over node cells.

    Row ``j`` holds the mass of N(mean[j], std[j]**2) falling in the cell of
    every node; cells are bounded by midpoints, and the two boundary cells
    extend to infinity so tail mass lands on the boundary nodes.
    """
    mids = state_grid.midpoints
    mean = np.asarray(mean, dtype=float)[:, None]
    std = np.asarray(std, dtype=float)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (mids[None, :] - mean) / std
    cdf = np.where(std > 0, ndtr(z), (mids[None, :] >= mean).astype(float))
    ones = np.ones((cdf.shape[0], 1))
    edges = np.hstack([0.0 * ones, cdf, ones])
    return np.diff(edges, axis=1)


def kernel_std(state_grid, dt, p):
    return diffusion(state_grid.nodes, p) * np.sqrt(dt)


def check_resolution(state_grid, dt, p):
    std = kernel_std(state_grid, dt, p)
    need = 0.5 * state_grid.local_spacing
    bad = np.nonzero(std[1:-1] < need[1:-1])[0]
    if bad.size:
        j = int(bad[0]) + 1
        raise ResolutionError(
            f"kernel std {std[j]:.3g} < half spacing {need[j]:.3g} at x={state_grid.nodes[j]:.6g}; "
            "refine the state grid or lengthen the time step", "n_nodes")


def control_kernels(state_grid, dt, p, levels, player=1, other=0.0, check=True):
    """One transition matrix per control level of ``player``."""
    if check:
        check_resolution(state_grid, dt, p)
    x = state_grid.nodes
    std = kernel_std(state_grid, dt, p)
    mats = []
    for u in levels:
        u1, u2 = (u, other) if player == 1 else (other, u)
        mats.append(transition_matrix(state_grid, x + drift(x, u1, u2, p) * dt, std))
    return np.stack(mats)


def argmax_smallest(cand, axis=0):
    """Index of the maximum along ``axis``, ties (to ``TIE_RTOL``) to the lowest index."""
    best = cand.max(axis=axis, keepdims=True)
    ok = cand >= best - TIE_RTOL * np.maximum(1.0, np.abs(best))
    return np.argmax(ok, axis=axis), np.squeeze(best, axis=axis)


def _stops(stop, cont, absorbed):
    """Stopping wins ties, except at absorbed nodes where it must strictly improve."""
    tol = TIE_RTOL * np.maximum(1.0, np.abs(cont))
    out = stop >= cont - tol
    if absorbed is not None:
        out &= ~absorbed | (stop > cont + tol)
    return out


def backward_induction(time_grid, terminal, rewards, kernels, gamma,
                       absorb=None, absorb_value=None, stop_value=None):
    """Generic backward recursion shared by the solvers.

    ``rewards[c, j]`` is the flow under control ``c`` at node ``j`` and
    ``kernels[c]`` its transition matrix.  Per slice ``k`` the order is:
    the control maximization, then optional absorption (``absorb[k, j]``
    pins the value to ``absorb_value[k, j]``), then an optional stopping
    option ``stop_value[k, j]`` which wins ties except at absorbed nodes.  Returns
    ``(values, control_index, stopped)``.
    """
    n = time_grid.n_steps
    dt = time_grid.dt
    disc = np.exp(-gamma * dt)
    n_nodes = terminal.shape[0]
    values = np.empty((n + 1, n_nodes))
    idx = np.zeros((n + 1, n_nodes), dtype=int)
    stopped = np.zeros((n + 1, n_nodes), dtype=bool)
    values[n] = terminal
    if absorb is not None:
        values[n] = np.where(absorb[n], absorb_value[n], values[n])
    if stop_value is not None:
        stopped[n] = _stops(stop_value[n], values[n], None if absorb is None else absorb[n])
        values[n] = np.where(stopped[n], stop_value[n], values[n])
    for k in range(n - 1, -1, -1):
        cand = rewards * dt + disc * (kernels @ values[k + 1])
        idx[k], best = argmax_smallest(cand)
        if absorb is not None:
            best = np.where(absorb[k], absorb_value[k], best)
        if stop_value is not None:
            stopped[k] = _stops(stop_value[k], best, None if absorb is None else absorb[k])
            best = np.where(stopped[k], stop_value[k], best)
        # the control is irrelevant where the game is absorbed or stopped
        if absorb is not None:
            idx[k][absorb[k]] = 0
        idx[k][stopped[k]] = 0
        values[k] = best
    idx[n] = idx[n - 1]
    return values, idx, stopped


def backward_value(grids, terminal, running_reward, m, p, player=1, other=0.0):
    """Optimal value surface and feedback policy by kernel backward induction.

    ``running_reward(x, u)`` is vectorized over state nodes.  The policy
    attains the maximum at each node, ties going to the smallest control.
    """
    tg, sg, cg = grids.time, grids.state, grids.control
    terminal = np.asarray(terminal, dtype=float)
    if terminal.shape != (len(sg),) or not np.all(np.isfinite(terminal)):
        raise DomainError("terminal payoff must be finite on every state node", "terminal")
    kernels = control_kernels(sg, tg.dt, p, cg.levels, player, other)
    rewards = np.stack([np.broadcast_to(running_reward(sg.nodes, u), sg.nodes.shape)
                        for u in cg.levels])
    values, idx, _ = backward_induction(tg, terminal, rewards, kernels, m.gamma)
    return ValueSurface(tg, sg, values), FeedbackPolicy(tg, sg, cg.levels[idx])


def signaling_reward(m, epsilon=0.0):
    """Weak incumbent's flow while mimicking: ``(Q - u) x - epsilon u**2 x``."""
    return lambda x, u: (m.Q - u - epsilon * u * u) * x


def duopoly_value(state_grid, m, p):
    """Incumbent's continuation value once entry has occurred."""
    return continuation_value(state_grid.nodes, 0.0, 0.0, m.D_I_w, p, m.gamma)


def solve_incumbent(m, p, grids, entrant_rule, epsilon=0.0):
    """Weak incumbent's signaling problem under a given entry rule.

    Wherever ``entrant_rule`` fires the game is absorbed into the duopoly
    continuation value; otherwise the incumbent earns the signaling flow.
    The horizon pays the duopoly continuation value as well.
    """
    tg, sg, cg = grids.time, grids.state, grids.control
    duo = duopoly_value(sg, m, p)
    kernels = control_kernels(sg, tg.dt, p, cg.levels)
    reward = signaling_reward(m, epsilon)
    rewards = np.stack([reward(sg.nodes, u) for u in cg.levels])
    absorb = entrant_rule.node_stop_set()
    values, idx, _ = backward_induction(
        tg, duo, rewards, kernels, m.gamma, absorb=absorb,
        absorb_value=np.broadcast_to(duo, absorb.shape))
    return ValueSurface(tg, sg, values), FeedbackPolicy(tg, sg, cg.levels[idx])
