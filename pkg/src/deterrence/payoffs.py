"""Market primitives, parametric assumptions and Monte Carlo payoff estimators."""
from dataclasses import dataclass

import numpy as np

from .exceptions import AssumptionError, DivergenceError, DomainError
from .model import drift
from .stopping import stopping_steps

LUMP_SUM = "lump_sum"
FLOW = "flow"
STRONG = "q"
WEAK = "w"


@dataclass(frozen=True)
class MarketPrimitives:
    """Payoff coefficients of the entry-deterrence game.

    ``u3_bar`` is a constant subtracted from the monopoly flow coefficient
    after the weak incumbent reveals itself (default 0).
    """

    Q: float
    M_w: float
    D_I_w: float
    D_E_w: float
    F: float
    gamma: float
    u3_bar: float = 0.0
    p0: float = 0.5


def check_assumptions(m):
    """Return ``m`` unchanged, or raise one error listing every violation."""
    bad = []
    for name in ("Q", "M_w", "D_I_w", "D_E_w", "F", "gamma", "u3_bar", "p0"):
        if not np.isfinite(getattr(m, name)):
            bad.append(f"{name} must be finite")
    if bad:
        raise AssumptionError(bad)
    if not m.D_E_w > 0:
        bad.append("D_E_w > 0 violated")
    if not m.M_w > m.Q:
        bad.append("M_w > Q violated")
    if not m.Q > m.D_E_w:
        bad.append("Q > D_E_w violated")
    if not m.F > 0:
        bad.append("F > 0 violated")
    if not m.gamma > 0:
        bad.append("gamma > 0 violated")
    if not 0 < m.p0 < 1:
        bad.append("0 < p0 < 1 violated")
    if bad:
        raise AssumptionError(bad)
    return m


def check_discount_bound(x, u1, u2, p, gamma):
    return bool(np.all(drift(x, u1, u2, p) <= gamma))


def continuation_value(x, u1, u2, coeff, p, gamma):
    """Capitalized flow ``coeff * x / (gamma - drift)``.

    Raises :class:`DivergenceError` wherever the drift reaches ``gamma``.
    """
    d = drift(x, u1, u2, p)
    if np.any(d >= gamma):
        worst = float(np.max(d))
        raise DivergenceError(
            f"drift {worst:.6g} >= gamma {gamma:.6g}: discounted payoff is infinite")
    out = coeff * np.asarray(x, dtype=float) / (gamma - d)
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class Estimate:
    estimate: float
    std_error: float
    n_paths: int

    def __iter__(self):
        return iter((self.estimate, self.std_error))


def _estimate(samples):
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    se = float(np.std(samples, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return Estimate(float(np.sum(samples) / n), se, n)


def _check_grid(ensemble, grid):
    if ensemble.n_steps != grid.n_steps or not np.allclose(ensemble.times, grid.times):
        raise DomainError("ensemble was simulated on a different time grid", "grid")


def incumbent_payoff_samples(ensemble, rho_rule, m, p, grid):
    _check_grid(ensemble, grid)
    x = ensemble.states
    n, dt = grid.n_steps, grid.dt
    disc = np.exp(-m.gamma * grid.times)
    rho = stopping_steps(rho_rule, grid.times, x, seed=ensemble.seed, dt=dt)
    k = np.arange(n)[None, :]
    signaling = k < rho[:, None]
    coeff = np.where(signaling, m.Q - ensemble.controls_u1, m.M_w - m.u3_bar)
    flow = np.sum(disc[None, :n] * coeff * x[:, :n], axis=1) * dt
    terminal = disc[n] * continuation_value(
        x[:, n], ensemble.controls_u1[:, -1], ensemble.controls_u2[:, -1], m.D_I_w, p, m.gamma)
    return flow + terminal


def incumbent_payoff_mc(ensemble, rho_rule, m, p, grid):
    """Weak incumbent's discounted payoff averaged over the ensemble.

    Signaling flow ``(Q - u1) x`` until the revelation step chosen by
    ``rho_rule``, monopoly flow ``(M_w - u3_bar) x`` afterwards, and the
    duopoly continuation value at the horizon.  Integrals are left-endpoint
    Riemann sums on the simulation grid.
    """
    return _estimate(incumbent_payoff_samples(ensemble, rho_rule, m, p, grid))


def entrant_payoff_samples(ensemble, entry_rule, theta, m, p, grid, form=LUMP_SUM):
    if theta not in (STRONG, WEAK):
        raise DomainError(f"theta must be 'q' or 'w', got {theta!r}", "theta")
    if form not in (LUMP_SUM, FLOW):
        raise DomainError(f"unknown payoff form {form!r}", "form")
    _check_grid(ensemble, grid)
    x, u1, u2 = ensemble.states, ensemble.controls_u1, ensemble.controls_u2
    n, dt = grid.n_steps, grid.dt
    disc = np.exp(-m.gamma * grid.times)
    tau = stopping_steps(entry_rule, grid.times, x, seed=ensemble.seed, dt=dt)
    entered = tau <= n
    out = np.zeros(ensemble.n_paths)
    if not entered.any():
        return out
    rows = np.nonzero(entered)[0]
    kt = tau[rows]
    fee = m.F * disc[kt]
    if theta == STRONG:
        out[rows] = -fee
        return out
    if form == LUMP_SUM:
        # controls at the entry step; at the horizon use the last applied ones
        kc = np.minimum(kt, n - 1)
        ua, ub = u1[rows, kc], u2[rows, kc]
        gain = continuation_value(x[rows, kt], ua, ub, 1.0, p, m.gamma) * (m.D_E_w - ub ** 2)
        out[rows] = disc[kt] * gain - fee
    else:
        k = np.arange(n)[None, :]
        active = k >= kt[:, None]
        flow = np.where(active, disc[None, :n] * (m.D_E_w - u2[rows] ** 2) * x[rows, :n], 0.0)
        out[rows] = flow.sum(axis=1) * dt - fee
    return out


def entrant_payoff_mc(ensemble, entry_rule, theta, m, p, grid, form=LUMP_SUM):
    """Entrant's discounted payoff for a given type of incumbent.

    ``form="lump_sum"`` pays the capitalized duopoly value
    ``(D_E_w - u2**2) x / (gamma - drift)`` at the entry time;
    ``form="flow"`` accrues the flow ``(D_E_w - u2**2) x`` from entry to the
    horizon.  Both charge the fee ``F`` discounted from the entry time, and
    against the strong type only the fee remains.
    """
    return _estimate(entrant_payoff_samples(ensemble, entry_rule, theta, m, p, grid, form))
