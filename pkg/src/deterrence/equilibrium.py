"""Coupled entry / revelation stopping game solved by best-response iteration.

The weak incumbent chooses a signaling control and when to reveal its type;
the entrant, holding a posterior on the incumbent's type, chooses when to
pay the fee and enter.  Within a time step the incumbent moves first and the
entrant observes the move before deciding.
"""
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import _rng
from .beliefs import belief_update, logit, posterior_prob
from .exceptions import ConvergenceError, DomainError
from .grids import FeedbackPolicy, Grids
from .model import diffusion, drift, step_euler, validate_params
from .payoffs import STRONG, WEAK, check_assumptions, continuation_value
from .pic import (backward_induction, backward_value, control_kernels, duopoly_value,
                  signaling_reward, TIE_RTOL)
from .stopping import ABOVE, BELOW, NEVER, StoppingRule, apply_mixing


class StoppingStructureWarning(UserWarning):
    """A stopping set is not a single threshold region."""


def _rule_from_set(kind, stop, grids, who):
    rule, regular = StoppingRule.from_stop_set(kind, stop, grids.time, grids.state)
    if not regular:
        warnings.warn(f"{who} stopping set is not a threshold region; returning the exact set",
                      StoppingStructureWarning, stacklevel=3)
    return rule


def post_entry_problem(m, p, grids):
    """Entrant's post-entry control and the lump-sum gain from entering.

    The control maximizes the duopoly flow ``(D_E_w - u2**2) x``; the gain at
    node ``(k, j)`` capitalizes that flow at the optimal control,
    ``(D_E_w - u2*) x / (gamma - drift)``.
    """
    sg = grids.state
    x = sg.nodes
    terminal = continuation_value(x, 0.0, 0.0, m.D_E_w, p, m.gamma)
    _, policy = backward_value(grids, terminal, lambda x, u: (m.D_E_w - u * u) * x,
                               m, p, player=2, other=0.0)
    u2 = policy.controls
    gain = continuation_value(x[None, :], 0.0, u2, 1.0, p, m.gamma) * (m.D_E_w - u2 ** 2)
    return policy, gain


def full_information_entry(m, p, grids, gain=None):
    """Entrant's stopping problem once the incumbent is known to be weak.

    Returns ``(rule, values)``.
    """
    if gain is None:
        _, gain = post_entry_problem(m, p, grids)
    tg, sg = grids.time, grids.state
    k0 = control_kernels(sg, tg.dt, p, [0.0])
    zeros = np.zeros((1, len(sg)))
    values, _, stopped = backward_induction(tg, np.zeros(len(sg)), zeros, k0, m.gamma,
                                            stop_value=gain - m.F)
    return _rule_from_set(ABOVE, stopped, grids, "full-information entry"), values


def posterior_weak(m, p, grids, x0, u1):
    """Entrant's probability that the incumbent is weak at every grid node."""
    x = grids.state.nodes[None, :]
    z0 = logit(m.p0)
    with np.errstate(divide="ignore", invalid="ignore"):
        if np.all(diffusion(x, p) > 0):
            z = belief_update(x, x0, z0, u1, 0.0, p)
        else:
            var = diffusion(x, p) ** 2
            z = z0 + (2.0 / var) * drift(x, u1, 0.0, p) * (x - x0)
    z = np.where(np.isnan(z), z0, z)
    return 1.0 - posterior_prob(z)


def _policy_kernels(grids, p, controls):
    levels, inverse = np.unique(controls, return_inverse=True)
    kernels = control_kernels(grids.state, grids.time.dt, p, levels)
    return kernels, inverse.reshape(controls.shape)


def entrant_best_response(incumbent_policy, revelation_rule, m, p, grids, x0):
    """Entry rule against a signaling incumbent, plus the post-entry control.

    Returns ``(entry_rule, post_entry_policy)``.  While the incumbent
    signals, the entrant enters when ``P(weak) * gain - F`` is at least the
    continuation value; the rule records that decision at every node, and
    where the incumbent reveals the entrant's value follows the
    full-information problem instead.
    """
    tg, sg = grids.time, grids.state
    post_policy, gain = post_entry_problem(m, p, grids)
    _, full_values = full_information_entry(m, p, grids, gain)
    u1 = incumbent_policy.controls
    pw = posterior_weak(m, p, grids, x0, u1)
    stop = pw * gain - m.F
    reveal = revelation_rule.node_stop_set()
    kernels, which = _policy_kernels(grids, p, u1)
    disc = np.exp(-m.gamma * tg.dt)
    cols = np.arange(len(sg))
    n = tg.n_steps
    values = np.empty((n + 1, len(sg)))
    enter = np.zeros((n + 1, len(sg)), dtype=bool)

    def settle(k, cont):
        # decision defined off-path too, so the rule is a full feedback strategy
        enter[k] = stop[k] >= cont - TIE_RTOL * np.maximum(1.0, np.abs(cont))
        values[k] = np.where(reveal[k], full_values[k], np.where(enter[k], stop[k], cont))

    settle(n, np.zeros(len(sg)))
    for k in range(n - 1, -1, -1):
        cont = disc * (kernels @ values[k + 1])[which[k], cols]
        settle(k, cont)
    return _rule_from_set(ABOVE, enter, grids, "entry"), post_policy


def incumbent_problem(entry_rule, m, p, grids, revealed_entry_rule=None, epsilon=0.0):
    """Weak incumbent's joint control-and-revelation problem.

    Returns a dict with the signaling-phase values ``signal``, the revealed
    regime values ``revealed``, the control index array ``control_index`` and
    the boolean ``reveal`` set.
    """
    tg, sg, cg = grids.time, grids.state, grids.control
    if revealed_entry_rule is None:
        revealed_entry_rule, _ = full_information_entry(m, p, grids)
    duo = duopoly_value(sg, m, p)
    shape = (tg.n_steps + 1, len(sg))
    duo_grid = np.broadcast_to(duo, shape)
    k0 = control_kernels(sg, tg.dt, p, [0.0])
    monopoly = ((m.M_w - m.u3_bar) * sg.nodes)[None, :]
    revealed, _, _ = backward_induction(tg, duo, monopoly, k0, m.gamma,
                                        absorb=revealed_entry_rule.node_stop_set(),
                                        absorb_value=duo_grid)
    kernels = control_kernels(sg, tg.dt, p, cg.levels)
    reward = signaling_reward(m, epsilon)
    rewards = np.stack([reward(sg.nodes, u) for u in cg.levels])
    signal, idx, reveal = backward_induction(tg, duo, rewards, kernels, m.gamma,
                                             absorb=entry_rule.node_stop_set(),
                                             absorb_value=duo_grid, stop_value=revealed)
    # nothing is decided at the horizon
    reveal[-1] = reveal[-2]
    return {"signal": signal, "revealed": revealed, "control_index": idx, "reveal": reveal}


def incumbent_best_response(entry_rule, m, p, grids, revealed_entry_rule=None, epsilon=0.0):
    """Signaling policy and revelation rule against a given entry rule.

    ``entry_rule`` applies while the incumbent mimics the strong type;
    ``revealed_entry_rule`` applies after revelation and defaults to the
    entrant's full-information best response.  Revealing wins ties.
    """
    sol = incumbent_problem(entry_rule, m, p, grids, revealed_entry_rule, epsilon)
    policy = FeedbackPolicy(grids.time, grids.state, grids.control.levels[sol["control_index"]])
    return policy, _rule_from_set(BELOW, sol["reveal"], grids, "revelation")


@dataclass(frozen=True)
class Diagnostics:
    entry_prob: float
    mean_entry_time: float
    revelation_prob: float
    incumbent_payoff: float
    entrant_payoff: float
    entrant_payoff_weak: float
    entrant_payoff_strong: float
    n_paths: int
    seed: int


@dataclass(frozen=True, eq=False)
class EquilibriumSolution:
    incumbent_policy: FeedbackPolicy
    revelation_rule: StoppingRule
    entrant_entry_rule: StoppingRule
    entrant_post_entry_policy: FeedbackPolicy
    full_information_entry_rule: StoppingRule
    residual: float
    iterations: int
    residuals: tuple = ()
    epsilon: float = 0.0
    diagnostics: Diagnostics = None
    converged: bool = True


@dataclass(frozen=True, eq=False)
class GameOutcome:
    """Per-path results of a simulated game; steps equal ``n_steps + 1`` mean "never"."""

    theta: str
    states: np.ndarray
    entry_step: np.ndarray
    reveal_step: np.ndarray
    incumbent_payoff: np.ndarray
    entrant_payoff: np.ndarray
    times: np.ndarray = field(repr=False, default=None)


def simulate_game(solution, m, p, grids, x0, n_paths, seed, theta=WEAK, epsilon=None, threads=None):
    """Play the game forward along simulated demand paths.

    Each step: the weak incumbent may reveal (mixed rules draw from the
    per-path mixing stream), then the entrant, having observed that move,
    may enter.  Entry ends the game with the duopoly continuation values;
    otherwise the horizon pays them.  The strong type mimics forever.
    """
    tg = grids.time
    n, dt = tg.n_steps, tg.dt
    times = tg.times
    disc = np.exp(-m.gamma * times)
    eps = solution.epsilon if epsilon is None else epsilon
    reveal_rule = solution.revelation_rule
    prob_mix = -np.expm1(-reveal_rule.hazard * dt) if reveal_rule.hazard > 0 else 1.0

    def run(start, stop):
        size = stop - start
        noise = _rng.normal_block(seed, start, stop, n)
        mix = _rng.uniform_block(seed, start, stop, n + 1)
        x = np.empty((size, n + 1))
        x[:, 0] = x0
        revealed = np.zeros(size, dtype=bool)
        entered = np.zeros(size, dtype=bool)
        entry_step = np.full(size, n + 1)
        reveal_step = np.full(size, n + 1)
        inc = np.zeros(size)
        ent = np.zeros(size)
        for k in range(n + 1):
            xk, s = x[:, k], times[k]
            live = ~entered
            if theta == WEAK:
                fire = live & ~revealed & reveal_rule.in_region(s, xk) & (mix[:, k] < prob_mix)
                revealed |= fire
                reveal_step[fire] = k
            signaling = live & ~revealed
            enters = live & np.where(revealed, solution.full_information_entry_rule.in_region(s, xk),
                                     solution.entrant_entry_rule.in_region(s, xk))
            entered |= enters
            entry_step[enters] = k
            if enters.any():
                xe = xk[enters]
                inc[enters] += disc[k] * continuation_value(xe, 0.0, 0.0, m.D_I_w, p, m.gamma)
                if theta == WEAK:
                    u2 = solution.entrant_post_entry_policy.lookup(s, xe)
                    g = continuation_value(xe, 0.0, u2, 1.0, p, m.gamma) * (m.D_E_w - u2 ** 2)
                    ent[enters] = disc[k] * (g - m.F)
                else:
                    ent[enters] = -m.F * disc[k]
            live = ~entered
            if k == n:
                inc[live] += disc[n] * continuation_value(xk[live], 0.0, 0.0, m.D_I_w, p, m.gamma)
                break
            u1 = np.where(signaling & live, solution.incumbent_policy.lookup(s, xk), 0.0)
            u2 = np.where(entered, solution.entrant_post_entry_policy.lookup(s, xk), 0.0)
            coeff = np.where(signaling, m.Q - u1 - eps * u1 * u1, m.M_w - m.u3_bar)
            inc[live] += disc[k] * coeff[live] * xk[live] * dt
            x[:, k + 1] = step_euler(xk, u1, u2, dt, noise[:, k], p)
        return x, entry_step, reveal_step, inc, ent

    parts = _rng.map_chunks(run, int(n_paths), threads, chunk=max(1, min(_rng.CHUNK, (1 << 22) // (n + 1))))
    cat = [np.concatenate([q[i] for q in parts]) for i in range(5)]
    return GameOutcome(theta, cat[0], cat[1], cat[2], cat[3], cat[4], times)


def diagnose(solution, m, p, grids, x0, n_paths, seed, threads=None):
    weak = simulate_game(solution, m, p, grids, x0, n_paths, seed, WEAK, threads=threads)
    strong = simulate_game(solution, m, p, grids, x0, n_paths, seed, STRONG, threads=threads)
    n = grids.time.n_steps
    entered = weak.entry_step <= n
    mean_entry = float(np.mean(grids.time.times[weak.entry_step[entered]])) if entered.any() else float("nan")
    e_weak = float(np.mean(weak.entrant_payoff))
    e_strong = float(np.mean(strong.entrant_payoff))
    return Diagnostics(
        entry_prob=float(np.mean(entered)),
        mean_entry_time=mean_entry,
        revelation_prob=float(np.mean(weak.reveal_step <= n)),
        incumbent_payoff=float(np.mean(weak.incumbent_payoff)),
        entrant_payoff=m.p0 * e_strong + (1 - m.p0) * e_weak,
        entrant_payoff_weak=e_weak,
        entrant_payoff_strong=e_strong,
        n_paths=int(n_paths), seed=int(seed))


def _damp(new, old, damping):
    if damping >= 1.0 or new.mask is not None or old.mask is not None:
        return new
    if new.kind == NEVER and old.kind == NEVER:
        return new
    thr = damping * new.thresholds + (1.0 - damping) * old.thresholds
    return StoppingRule(ABOVE, new.time_grid, new.state_grid, thr)


def solve_equilibrium(m, p, grids, x0, max_iter=50, tol=1e-4, damping=1.0, epsilon=0.0,
                      hazard=0.0, n_paths=10_000, seed=0, threads=None, diagnostics=True):
    """Alternate best responses from the no-entry rule until thresholds settle.

    The residual is the sup-norm change of the entry thresholds, revelation
    thresholds and signaling policy between consecutive iterations (only the
    entry thresholds on the first one, since the incumbent's response is a
    deterministic function of them).
    """
    validate_params(p)
    check_assumptions(m)
    if not 0 < damping <= 1:
        raise DomainError("damping must lie in (0, 1]", "damping")
    full_rule, _ = full_information_entry(m, p, grids)
    entry = StoppingRule.never(grids.time, grids.state)
    policy = reveal = post = None
    trace = []
    for it in range(1, int(max_iter) + 1):
        new_policy, new_reveal = incumbent_best_response(entry, m, p, grids, full_rule, epsilon)
        new_entry, post = entrant_best_response(new_policy, new_reveal, m, p, grids, x0)
        new_entry = _damp(new_entry, entry, damping)
        res = float(np.max(np.abs(new_entry.thresholds - entry.thresholds)))
        if policy is not None:
            res = max(res,
                      float(np.max(np.abs(new_reveal.thresholds - reveal.thresholds))),
                      float(np.max(np.abs(new_policy.controls - policy.controls))))
        trace.append(res)
        entry, policy, reveal = new_entry, new_policy, new_reveal
        if res <= tol:
            break
    solution = EquilibriumSolution(
        incumbent_policy=policy, revelation_rule=apply_mixing(reveal, hazard) if reveal.kind == BELOW
        else replace(reveal, hazard=float(hazard)),
        entrant_entry_rule=entry, entrant_post_entry_policy=post,
        full_information_entry_rule=full_rule, residual=trace[-1], iterations=len(trace),
        residuals=tuple(trace), epsilon=float(epsilon), converged=trace[-1] <= tol)
    if not solution.converged:
        raise ConvergenceError(
            f"best-response iteration did not converge in {max_iter} iterations "
            f"(residual {trace[-1]:.3g} > {tol:.3g})", last_iterate=solution, residuals=trace)
    if diagnostics:
        diag = diagnose(solution, m, p, grids, x0, n_paths, seed, threads)
        solution = replace(solution, diagnostics=diag)
    return solution


__all__ = [
    "Grids", "StoppingStructureWarning", "post_entry_problem", "full_information_entry",
    "posterior_weak", "entrant_best_response", "incumbent_problem", "incumbent_best_response",
    "EquilibriumSolution", "Diagnostics", "GameOutcome", "simulate_game", "diagnose",
    "solve_equilibrium",
]
