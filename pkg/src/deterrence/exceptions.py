"""Exception hierarchy shared by every module.

Each class maps to one CLI exit code (see :mod:`deterrence.cli`).
"""


class DeterrenceError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class DomainError(DeterrenceError, ValueError):
    """An input lies outside the admissible domain.

    ``field`` names the offending parameter when there is one.
    """

    exit_code = 2

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class AssumptionError(DomainError):
    """One or more parametric assumptions on the market primitives fail.

    ``violations`` lists every violated inequality, not just the first.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class GridMismatchError(DomainError):
    pass


class ResolutionError(DomainError):
    """Transition kernel narrower than the state grid can resolve."""


class CFLError(DomainError):
    """Explicit time step violates the monotonicity (CFL) bound."""


class DivergenceError(DeterrenceError, ArithmeticError):
    """Discounted continuation value is infinite (drift >= discount rate)."""

    exit_code = 4


class SingularSystemError(DeterrenceError, ArithmeticError):
    exit_code = 3


class ConvergenceError(DeterrenceError, RuntimeError):
    """Best-response iteration did not reach the tolerance.

    Carries the last iterate and the residual trace for inspection.
    """

    exit_code = 3

    def __init__(self, message, last_iterate=None, residuals=()):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residuals = list(residuals)
