"""Finite-difference HJB solver used to cross-check the path-integral solver.

Solves, backward from the horizon,

    -V_s = max_u { r(x, u) + b(x, u) V_x + sigma(x)**2 / 2 V_xx } - gamma V

with drift-upwinded first differences and a central second difference,
written as a Markov-chain generator so both time steppings stay monotone.
Discounting over a step is applied exactly through ``exp(-gamma dt)``.
"""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from .exceptions import CFLError, DomainError, SingularSystemError
from .grids import FeedbackPolicy, ValueSurface, check_same_grid
from .model import diffusion, drift
from .pic import argmax_smallest


@dataclass(frozen=True)
class FdScheme:
    time_stepping: str = "implicit"
    boundary: str = "one-sided"
    cfl_safety: float = 1.0

    def __post_init__(self):
        if self.time_stepping not in ("implicit", "explicit"):
            raise DomainError(f"unknown time stepping {self.time_stepping!r}", "scheme")
        if self.boundary != "one-sided":
            raise DomainError(f"unknown boundary handling {self.boundary!r}", "boundary")
        if not 0 < self.cfl_safety <= 1:
            raise DomainError("cfl_safety must lie in (0, 1]", "cfl_safety")


def generator_rates(state_grid, p, levels, player=1, other=0.0):
    """Jump rates ``(up, down)``, each of shape ``(n_controls, n_nodes)``.

    Boundary nodes keep only the inward rates (outward moves are suppressed),
    the finite-difference analogue of a sticky boundary.
    """
    x = state_grid.nodes
    hp = np.r_[np.diff(x), np.nan]
    hm = np.r_[np.nan, np.diff(x)]
    a = 0.5 * diffusion(x, p) ** 2
    up = np.empty((len(levels), x.size))
    down = np.empty_like(up)
    for c, u in enumerate(levels):
        u1, u2 = (u, other) if player == 1 else (other, u)
        b = drift(x, u1, u2, p)
        bp, bm = np.maximum(b, 0.0), np.maximum(-b, 0.0)
        with np.errstate(invalid="ignore"):
            up[c] = 2 * a / ((hp + hm) * hp) + bp / hp
            down[c] = 2 * a / ((hp + hm) * hm) + bm / hm
        up[c, 0] = a[0] / hp[0] ** 2 + bp[0] / hp[0]
        down[c, 0] = 0.0
        down[c, -1] = a[-1] / hm[-1] ** 2 + bm[-1] / hm[-1]
        up[c, -1] = 0.0
    return up, down


def _apply(up, down, v):
    """Generator applied to ``v`` row-wise: ``up (v[j+1]-v[j]) + down (v[j-1]-v[j])``."""
    fwd = np.r_[v[1:] - v[:-1], 0.0]
    bwd = np.r_[0.0, v[:-1] - v[1:]]
    return up * fwd + down * bwd


def check_cfl(up, down, dt, safety):
    worst = float(np.max(up + down)) * dt
    if worst > safety:
        raise CFLError(f"explicit step violates CFL: dt * max rate = {worst:.4g} > {safety}", "n_steps")


def solve_hjb_fd(m, p, grids, terminal, running_reward, scheme=None, player=1, other=0.0):
    scheme = scheme or FdScheme()
    tg, sg, cg = grids.time, grids.state, grids.control
    terminal = np.asarray(terminal, dtype=float)
    if terminal.shape != (len(sg),) or not np.all(np.isfinite(terminal)):
        raise DomainError("terminal payoff must be finite on every state node", "terminal")
    dt, n = tg.dt, tg.n_steps
    disc = np.exp(-m.gamma * dt)
    up, down = generator_rates(sg, p, cg.levels, player, other)
    if scheme.time_stepping == "explicit":
        check_cfl(up, down, dt, scheme.cfl_safety)
    rewards = np.stack([np.broadcast_to(running_reward(sg.nodes, u), sg.nodes.shape)
                        for u in cg.levels])
    cols = np.arange(len(sg))
    values = np.empty((n + 1, len(sg)))
    idx = np.zeros((n + 1, len(sg)), dtype=int)
    values[n] = terminal
    for k in range(n - 1, -1, -1):
        v = values[k + 1]
        gen = np.stack([_apply(up[c], down[c], v) for c in range(len(cg))])
        explicit = rewards * dt + disc * (v + dt * gen)
        idx[k], best = argmax_smallest(explicit)
        if scheme.time_stepping == "explicit":
            values[k] = best
            continue
        u_up, u_down = up[idx[k], cols], down[idx[k], cols]
        ab = np.zeros((3, len(sg)))
        ab[0, 1:] = -dt * u_up[:-1]
        ab[1] = 1.0 + dt * (u_up + u_down)
        ab[2, :-1] = -dt * u_down[1:]
        try:
            w = solve_banded((1, 1), ab, v)
        except (LinAlgError, ValueError) as exc:
            raise SingularSystemError(f"implicit step {k} failed: {exc}") from exc
        if not np.all(np.isfinite(w)):
            raise SingularSystemError(f"implicit step {k} produced non-finite values")
        values[k] = rewards[idx[k], cols] * dt + disc * w
    idx[n] = idx[n - 1]
    return ValueSurface(tg, sg, values), FeedbackPolicy(tg, sg, cg.levels[idx])


@dataclass(frozen=True)
class CrossValidationReport:
    value_gap: float
    policy_agreement: float
    tol_value: float
    tol_policy_agreement: float

    @property
    def value_ok(self):
        return self.value_gap <= self.tol_value

    @property
    def policy_ok(self):
        return self.policy_agreement >= self.tol_policy_agreement

    @property
    def passed(self):
        return self.value_ok and self.policy_ok

    def rows(self):
        return [("value_gap", self.value_gap, self.tol_value, self.value_ok),
                ("policy_agreement", self.policy_agreement, self.tol_policy_agreement, self.policy_ok)]


def _split(result):
    if isinstance(result, tuple):
        return result
    return result, None


def cross_validate(pic, hjb, tol_value, tol_policy_agreement):
    """Compare two solutions on the same grid.

    ``pic`` and ``hjb`` are ``(ValueSurface, FeedbackPolicy)`` pairs (a bare
    surface is accepted; agreement then counts as 1).  The value gap is the
    sup-norm difference relative to the sup-norm of ``hjb``; agreement is the
    fraction of decision nodes (all slices but the horizon) with equal
    controls.
    """
    v1, pol1 = _split(pic)
    v2, pol2 = _split(hjb)
    check_same_grid(v1, v2)
    scale = max(float(np.max(np.abs(v2.values))), np.finfo(float).tiny)
    gap = float(np.max(np.abs(v1.values - v2.values))) / scale
    if pol1 is None or pol2 is None:
        agree = 1.0
    else:
        check_same_grid(pol1, pol2)
        agree = float(np.mean(pol1.controls[:-1] == pol2.controls[:-1]))
    return CrossValidationReport(gap, agree, float(tol_value), float(tol_policy_agreement))
