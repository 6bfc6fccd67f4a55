"""Flat ``key = value`` scenario files.

Lines starting with ``#`` and blank lines are ignored.  Keys are the
lower_snake_case names of :class:`ScenarioConfig`; unknown keys are errors.
``control_levels`` is a comma-separated list; optional numbers accept
``none``.
"""
import hashlib
from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np

from .exceptions import DomainError
from .grids import ControlGrid, Grids, StateGrid, TimeGrid
from .hjb import FdScheme
from .model import CklsParams, validate_params
from .payoffs import MarketPrimitives, check_assumptions

# not part of the reproducibility hash: they never change results
_UNHASHED = ("out_dir", "threads")


@dataclass(frozen=True)
class ScenarioConfig:
    alpha1: float = 0.3
    alpha2: float = -0.2
    alpha3: float = 0.3
    alpha4: float = 0.5
    theta1: float = 0.2
    theta2: float = 0.5
    q: float = 1.0
    m_w: float = 1.5
    d_i_w: float = 0.4
    d_e_w: float = 0.5
    f: float = 0.8
    gamma: float = 1.0
    u3_bar: float = 0.0
    p0: float = 0.5
    x0: float = 2.0
    t: float = 1.0
    n_steps: int = 40
    x_min: float = 0.3
    x_max: float = 4.0
    n_nodes: int = 80
    spacing: str = "uniform"
    control_levels: str = "0,0.25,0.5,0.75,1"
    problem: str = "incumbent"
    scheme: str = "implicit"
    cfl_safety: float = 1.0
    tol: float = 1e-4
    max_iter: int = 50
    damping: float = 1.0
    epsilon: float = 0.0
    hazard: float = 0.0
    tol_value: float = 0.05
    tol_policy_agreement: float = 0.95
    u1: float = 0.0
    u2: float = 0.0
    entry_threshold: Optional[float] = None
    revelation_threshold: Optional[float] = None
    with_beliefs: bool = False
    n_paths: int = 10_000
    seed: int = 0
    out_dir: str = "."
    threads: int = 0

    @property
    def params(self):
        return CklsParams(self.alpha1, self.alpha2, self.alpha3, self.alpha4, self.theta1, self.theta2)

    @property
    def market(self):
        return MarketPrimitives(self.q, self.m_w, self.d_i_w, self.d_e_w, self.f, self.gamma,
                                self.u3_bar, self.p0)

    @property
    def levels(self):
        try:
            return [float(v) for v in self.control_levels.split(",") if v.strip()]
        except ValueError as exc:
            raise DomainError(f"bad control_levels {self.control_levels!r}", "control_levels") from exc

    @property
    def grids(self):
        return Grids(TimeGrid(self.t, self.n_steps),
                     StateGrid.build(self.x_min, self.x_max, self.n_nodes, self.spacing),
                     ControlGrid(self.levels))

    @property
    def fd_scheme(self):
        return FdScheme(self.scheme, cfl_safety=self.cfl_safety)

    def canonical(self):
        d = asdict(self)
        return "\n".join(f"{k}={_render(d[k])}" for k in sorted(d) if k not in _UNHASHED)

    def digest(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def validate(self):
        validate_params(self.params)
        check_assumptions(self.market)
        if not np.isfinite(self.x0) or self.x0 <= 0:
            raise DomainError("x0 must be positive", "x0")
        if self.n_paths < 1:
            raise DomainError("n_paths must be positive", "n_paths")
        _ = self.grids
        return self


def _render(v):
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}


def _coerce(key, raw):
    kind = _TYPES[key]
    raw = raw.strip()
    try:
        if kind is bool:
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind == Optional[float]:
            return None if raw.lower() in ("none", "") else float(raw)
        return raw
    except ValueError as exc:
        raise DomainError(f"cannot parse {key}={raw!r}", key) from exc


def parse_pairs(lines, source="config"):
    out = {}
    for n, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DomainError(f"{source}:{n}: expected key = value", "config")
        key, raw = line.split("=", 1)
        key = key.strip()
        if key not in _TYPES:
            raise DomainError(f"{source}:{n}: unknown key {key!r}", key)
        out[key] = _coerce(key, raw)
    return out


def load_config(path=None, overrides=()):
    """Parse a config file, apply ``key=value`` overrides, validate."""
    values = {}
    if path is not None:
        try:
            with open(path) as fh:
                values.update(parse_pairs(fh, str(path)))
        except OSError as exc:
            raise DomainError(f"cannot read config {path}: {exc}", "config") from exc
    values.update(parse_pairs(overrides, "--set"))
    return ScenarioConfig(**values).validate()


def dump_config(cfg):
    d = asdict(cfg)
    return "".join(f"{k} = {_render(v)}\n" for k, v in d.items())
