"""Controlled CKLS demand process.

    dX = (alpha1 + alpha2 X + theta1 u1 + theta2 u2) ds + alpha3 X**alpha4 dB

simulated with a full-truncation Euler scheme that keeps states nonnegative.
"""
from dataclasses import dataclass, fields

import numpy as np

from . import _rng
from .exceptions import DomainError
from .grids import TimeGrid


@dataclass(frozen=True)
class CklsParams:
    alpha1: float
    alpha2: float
    alpha3: float
    alpha4: float
    theta1: float = 0.0
    theta2: float = 0.0


def validate_params(p):
    """Return ``p`` unchanged if it is an admissible parameter set."""
    for f in fields(p):
        v = getattr(p, f.name)
        if not np.isfinite(v):
            raise DomainError(f"{f.name} must be finite, got {v!r}", f.name)
    if p.alpha3 < 0:
        raise DomainError(f"alpha3 must be >= 0, got {p.alpha3}", "alpha3")
    if not 0.5 <= p.alpha4 <= 1.5:
        raise DomainError(f"alpha4 must lie in [0.5, 1.5], got {p.alpha4}", "alpha4")
    return p


def drift(x, u1, u2, p):
    return p.alpha1 + p.alpha2 * x + p.theta1 * u1 + p.theta2 * u2


def diffusion(x, p):
    # alpha4 >= 0.5 so 0**alpha4 == 0 without special casing
    return p.alpha3 * np.power(x, p.alpha4)


def step_euler(x, u1, u2, dt, noise, p):
    xc = np.maximum(x, 0.0)
    nxt = xc + drift(xc, u1, u2, p) * dt + diffusion(xc, p) * np.sqrt(dt) * noise
    return np.maximum(nxt, 0.0)


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    times: np.ndarray
    states: np.ndarray        # (n_paths, n_steps + 1)
    controls_u1: np.ndarray   # (n_paths, n_steps)
    controls_u2: np.ndarray
    seed: int

    def __post_init__(self):
        for name in ("times", "states", "controls_u1", "controls_u2"):
            arr = getattr(self, name)
            arr.setflags(write=False)

    @property
    def n_paths(self):
        return self.states.shape[0]

    @property
    def n_steps(self):
        return self.states.shape[1] - 1


def _control_fn(policy):
    if policy is None:
        return lambda s, x: np.zeros_like(x)
    if np.isscalar(policy):
        value = float(policy)
        return lambda s, x: np.full_like(x, value)
    return policy.lookup


def simulate_paths(p, policy1, policy2, grid, x0, n_paths, seed, threads=None):
    """Simulate ``n_paths`` controlled trajectories on ``grid``.

    ``policy1``/``policy2`` are :class:`FeedbackPolicy` objects, scalars
    (constant control) or ``None`` (zero control).  Path ``i`` consumes the
    counter-based stream ``(seed, i)``, so the ensemble is identical for any
    thread count.
    """
    validate_params(p)
    if not isinstance(grid, TimeGrid):
        raise DomainError("grid must be a TimeGrid", "grid")
    if not (np.isfinite(x0) and x0 > 0):
        raise DomainError("x0 must be positive", "x0")
    if int(n_paths) != n_paths or n_paths < 1:
        raise DomainError("n_paths must be a positive integer", "n_paths")
    n_paths = int(n_paths)
    ctrl1, ctrl2 = _control_fn(policy1), _control_fn(policy2)
    times = grid.times
    n, dt = grid.n_steps, grid.dt

    def run(start, stop):
        noise = _rng.normal_block(seed, start, stop, n)
        x = np.empty((stop - start, n + 1))
        u1 = np.empty((stop - start, n))
        u2 = np.empty((stop - start, n))
        x[:, 0] = x0
        for k in range(n):
            u1[:, k] = ctrl1(times[k], x[:, k])
            u2[:, k] = ctrl2(times[k], x[:, k])
            x[:, k + 1] = step_euler(x[:, k], u1[:, k], u2[:, k], dt, noise[:, k], p)
        return x, u1, u2

    chunk = max(1, min(_rng.CHUNK, (1 << 22) // (n + 1)))
    parts = _rng.map_chunks(run, n_paths, threads, chunk=chunk)
    states = np.concatenate([q[0] for q in parts])
    return PathEnsemble(times=times.copy(), states=states,
                        controls_u1=np.concatenate([q[1] for q in parts]),
                        controls_u2=np.concatenate([q[2] for q in parts]),
                        seed=int(seed))


def mean_ode(x0, t, p):
    """Closed-form mean of the uncontrolled process, m' = alpha1 + alpha2 m."""
    if p.alpha2 == 0:
        return x0 + p.alpha1 * t
    eq = -p.alpha1 / p.alpha2
    return eq + (x0 - eq) * np.exp(p.alpha2 * t)
