"""Threshold stopping rules for entry and revelation, with optional mixing."""
from dataclasses import dataclass, replace

import numpy as np

from . import _rng
from .exceptions import DomainError
from .grids import StateGrid, TimeGrid

ABOVE = "threshold-above"
BELOW = "threshold-below"
NEVER = "never"


@dataclass(frozen=True, eq=False)
class StoppingRule:
    """Stop when the (clamped) state crosses ``thresholds[k]`` at time node ``k``.

    States are clamped to ``[x_min, x_max]`` of ``state_grid`` before the
    comparison, matching the nearest-node extrapolation of policies.  When
    the optimal stopping set is not an interval, ``mask`` carries the exact
    set (time node x state node) and takes precedence over the thresholds.
    ``hazard`` > 0 turns the rule into a mixed one: inside the stopping
    region the rule fires with probability ``1 - exp(-hazard * dt)`` per step.
    """

    kind: str
    time_grid: TimeGrid
    state_grid: StateGrid
    thresholds: np.ndarray
    hazard: float = 0.0
    mask: np.ndarray = None

    def __post_init__(self):
        if self.kind not in (ABOVE, BELOW, NEVER):
            raise DomainError(f"unknown rule kind {self.kind!r}", "kind")
        thr = np.array(self.thresholds, dtype=float)
        if thr.shape != (self.time_grid.n_steps + 1,) or not np.all(np.isfinite(thr)):
            raise DomainError("thresholds must be finite, one per time node", "threshold")
        if not (np.isfinite(self.hazard) and self.hazard >= 0):
            raise DomainError("hazard must be a nonnegative number", "hazard")
        thr.setflags(write=False)
        object.__setattr__(self, "thresholds", thr)
        if self.mask is not None:
            mask = np.array(self.mask, dtype=bool)
            mask.setflags(write=False)
            object.__setattr__(self, "mask", mask)

    @classmethod
    def never(cls, time_grid, state_grid):
        return cls(NEVER, time_grid, state_grid, np.full(time_grid.n_steps + 1, above_sentinel(state_grid)))

    @classmethod
    def from_stop_set(cls, kind, stop, time_grid, state_grid, hazard=0.0):
        """Threshold rule induced by a boolean stop set ``stop[k, j]``.

        Returns ``(rule, is_threshold)``; when the set is not an up-set
        (``ABOVE``) or down-set (``BELOW``) in every slice the exact mask is
        attached and ``is_threshold`` is False.
        """
        stop = np.asarray(stop, dtype=bool)
        nodes = state_grid.nodes
        mids = state_grid.midpoints
        thr = np.empty(stop.shape[0])
        regular = True
        for k, row in enumerate(stop):
            if kind == ABOVE:
                if not row.any():
                    thr[k] = above_sentinel(state_grid)
                    continue
                j = int(np.argmax(row))
                regular &= bool(row[j:].all())
                thr[k] = below_sentinel(state_grid) if j == 0 else mids[j - 1]
            else:
                if not row.any():
                    thr[k] = below_sentinel(state_grid)
                    continue
                j = len(nodes) - 1 - int(np.argmax(row[::-1]))
                regular &= bool(row[: j + 1].all())
                thr[k] = above_sentinel(state_grid) if j == len(nodes) - 1 else mids[j]
        if not stop.any():
            return cls.never(time_grid, state_grid), True
        rule = cls(kind, time_grid, state_grid, thr, hazard, None if regular else stop)
        return rule, regular

    def node_stop_set(self):
        """Boolean ``(n_steps + 1, n_nodes)`` array of grid nodes where the rule fires."""
        if self.mask is not None:
            return self.mask.copy()
        x = self.state_grid.nodes[None, :]
        thr = self.thresholds[:, None]
        if self.kind == ABOVE:
            return np.broadcast_to(x >= thr, (thr.size, x.size)).copy()
        if self.kind == BELOW:
            return np.broadcast_to(x <= thr, (thr.size, x.size)).copy()
        return np.zeros((thr.size, x.size), dtype=bool)

    def in_region(self, s, x):
        """Whether state ``x`` at time ``s`` lies in the stopping region."""
        k = self.time_grid.nearest_index(s)
        x = np.asarray(x, dtype=float)
        if self.kind == NEVER:
            return np.zeros(np.shape(x), dtype=bool)
        if self.mask is not None:
            return self.mask[k, self.state_grid.nearest_index(x)]
        xc = np.clip(x, self.state_grid.nodes[0], self.state_grid.nodes[-1])
        if self.kind == ABOVE:
            return xc >= self.thresholds[k]
        return xc <= self.thresholds[k]


def above_sentinel(state_grid):
    return float(state_grid.nodes[-1] + state_grid.local_spacing[-1])


def below_sentinel(state_grid):
    return float(state_grid.nodes[0] - state_grid.local_spacing[0])


def apply_mixing(rule, hazard):
    if rule.kind != BELOW:
        raise DomainError(f"mixing applies to {BELOW!r} rules, got {rule.kind!r}", "kind")
    if not (np.isfinite(hazard) and hazard >= 0):
        raise DomainError("hazard must be a nonnegative number", "hazard")
    return replace(rule, hazard=float(hazard))


def stopping_steps(rule, times, states, seed=0, dt=None, threads=None):
    """First step index at which ``rule`` fires on each path.

    ``states`` has shape ``(n_paths, n_steps + 1)``; the result is an integer
    array with ``n_steps + 1`` meaning "never within the horizon".  Mixed
    rules draw their uniforms from the per-path mixing substream of ``seed``.
    """
    states = np.atleast_2d(states)
    n_paths, n_cols = states.shape
    prob = None
    if rule.hazard > 0:
        if dt is None:
            dt = float(times[1] - times[0])
        prob = -np.expm1(-rule.hazard * dt)

    def run(start, stop):
        block = states[start:stop]
        region = np.stack([rule.in_region(times[k], block[:, k]) for k in range(n_cols)], axis=1)
        if prob is not None:
            region &= _rng.uniform_block(seed, start, stop, n_cols) < prob
        return np.where(region.any(axis=1), np.argmax(region, axis=1), n_cols)

    chunk = max(1, min(_rng.CHUNK, (1 << 22) // n_cols))
    return np.concatenate(_rng.map_chunks(run, n_paths, threads, chunk=chunk))
