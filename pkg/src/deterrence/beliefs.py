"""Log-odds beliefs that the incumbent is the strong type."""
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .exceptions import DomainError
from .model import diffusion, drift


@dataclass(frozen=True)
class BeliefState:
    z: float

    @property
    def p(self):
        return float(posterior_prob(self.z))

    @classmethod
    def from_prob(cls, p):
        return cls(float(logit(p)))


def logit(p):
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)) or np.any(~np.isfinite(p)):
        raise DomainError("probability must lie strictly inside (0, 1)", "p0")
    out = np.log(p) - np.log1p(-p)
    return out if out.ndim else float(out)


def posterior_prob(z):
    """Inverse of :func:`logit`; saturates without overflow for large ``|z|``."""
    return expit(z)


def belief_update(x_s, x0, z0, u1, u2, p):
    """Belief after demand moves from ``x0`` to ``x_s``.

    The update is affine in ``x_s - x0`` with slope ``2 * drift / sigma**2``
    evaluated at the current state, and returns ``z0`` exactly when
    ``x_s == x0``.
    """
    x_s = np.asarray(x_s, dtype=float)
    var = diffusion(x_s, p) ** 2
    if np.any(var <= 0):
        raise DomainError("belief update needs positive diffusion at x_s", "x_s")
    out = z0 + (2.0 / var) * drift(x_s, u1, u2, p) * (x_s - x0)
    return out if np.ndim(out) else float(out)
