"""Time and state discretizations, value surfaces and feedback policies."""
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError, GridMismatchError


@dataclass(frozen=True)
class TimeGrid:
    """Uniform partition of ``[0, horizon]`` into ``n_steps`` subintervals."""

    horizon: float
    n_steps: int

    def __post_init__(self):
        if not (np.isfinite(self.horizon) and self.horizon > 0):
            raise DomainError("horizon must be positive", "t")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise DomainError("n_steps must be a positive integer", "n_steps")
        object.__setattr__(self, "n_steps", int(self.n_steps))
        object.__setattr__(self, "horizon", float(self.horizon))

    @property
    def dt(self):
        return self.horizon / self.n_steps

    @property
    def times(self):
        return np.arange(self.n_steps + 1) * self.dt

    def nearest_index(self, s):
        idx = np.rint(np.asarray(s, dtype=float) / self.dt).astype(int)
        return np.clip(idx, 0, self.n_steps)


@dataclass(frozen=True, eq=False)
class StateGrid:
    nodes: np.ndarray
    spacing: str = "uniform"

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 3:
            raise DomainError("state grid needs at least 3 nodes", "n_nodes")
        if not np.all(np.isfinite(nodes)) or nodes[0] < 0:
            raise DomainError("state nodes must be finite and nonnegative", "x_min")
        if np.any(np.diff(nodes) <= 0):
            raise DomainError("state nodes must be strictly increasing", "nodes")
        if self.spacing not in ("uniform", "log"):
            raise DomainError(f"unknown spacing {self.spacing!r}", "spacing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, x_min, x_max, n_nodes):
        return cls(np.linspace(x_min, x_max, int(n_nodes)), "uniform")

    @classmethod
    def log_uniform(cls, x_min, x_max, n_nodes):
        if x_min <= 0:
            raise DomainError("log spacing needs x_min > 0", "x_min")
        return cls(np.geomspace(x_min, x_max, int(n_nodes)), "log")

    @classmethod
    def build(cls, x_min, x_max, n_nodes, spacing="uniform"):
        if not x_max > x_min:
            raise DomainError("x_max must exceed x_min", "x_max")
        if spacing == "log":
            return cls.log_uniform(x_min, x_max, n_nodes)
        return cls.uniform(x_min, x_max, n_nodes)

    def __len__(self):
        return self.nodes.size

    @property
    def midpoints(self):
        return 0.5 * (self.nodes[1:] + self.nodes[:-1])

    @property
    def local_spacing(self):
        """Largest gap adjacent to each node."""
        gaps = np.diff(self.nodes)
        return np.maximum(np.r_[gaps[0], gaps], np.r_[gaps, gaps[-1]])

    def nearest_index(self, x):
        """Nearest node, clamping states outside ``[x_min, x_max]``."""
        return np.searchsorted(self.midpoints, np.asarray(x, dtype=float), side="left")

    def covers(self, x):
        return self.nodes[0] <= x <= self.nodes[-1]

    def same_as(self, other):
        return self.nodes.shape == other.nodes.shape and np.array_equal(self.nodes, other.nodes)


@dataclass(frozen=True, eq=False)
class ControlGrid:
    levels: np.ndarray

    def __post_init__(self):
        levels = np.unique(np.asarray(self.levels, dtype=float).ravel())
        if levels.size == 0:
            raise DomainError("control grid must be nonempty", "control_levels")
        if not np.all(np.isfinite(levels)) or levels[0] < 0:
            raise DomainError("control levels must be finite and >= 0", "control_levels")
        levels.setflags(write=False)
        object.__setattr__(self, "levels", levels)

    def __len__(self):
        return self.levels.size


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def check_same_grid(a, b):
    if a.time_grid != b.time_grid or not a.state_grid.same_as(b.state_grid):
        raise GridMismatchError("surfaces are defined on different grids")


@dataclass(frozen=True, eq=False)
class ValueSurface:
    """Value-to-go, ``values[k, j]`` at time ``times[k]`` and state ``nodes[j]``.

    Values are in time-``s`` units (discounted back to the current time).
    """

    time_grid: TimeGrid
    state_grid: StateGrid
    values: np.ndarray

    def __post_init__(self):
        shape = (self.time_grid.n_steps + 1, len(self.state_grid))
        vals = _frozen(self.values)
        if vals.shape != shape:
            raise GridMismatchError(f"values have shape {vals.shape}, expected {shape}")
        object.__setattr__(self, "values", vals)

    def lookup(self, s, x):
        return self.values[self.time_grid.nearest_index(s), self.state_grid.nearest_index(x)]


@dataclass(frozen=True, eq=False)
class FeedbackPolicy:
    """Closed-loop control ``u(s, x)`` tabulated on the (time x state) grid.

    Row ``n_steps`` (the horizon, where no decision is taken) repeats the
    last decision row so lookups near the horizon stay meaningful.
    """

    time_grid: TimeGrid
    state_grid: StateGrid
    controls: np.ndarray

    def __post_init__(self):
        shape = (self.time_grid.n_steps + 1, len(self.state_grid))
        ctrl = _frozen(self.controls)
        if ctrl.shape != shape:
            raise GridMismatchError(f"controls have shape {ctrl.shape}, expected {shape}")
        object.__setattr__(self, "controls", ctrl)

    @classmethod
    def constant(cls, value, time_grid, state_grid):
        return cls(time_grid, state_grid,
                   np.full((time_grid.n_steps + 1, len(state_grid)), float(value)))

    def lookup(self, s, x):
        return self.controls[self.time_grid.nearest_index(s), self.state_grid.nearest_index(x)]


@dataclass(frozen=True)
class Grids:
    """Bundle of the three discretizations used by every solver."""

    time: TimeGrid
    state: StateGrid
    control: ControlGrid = field(default_factory=lambda: ControlGrid([0.0]))
