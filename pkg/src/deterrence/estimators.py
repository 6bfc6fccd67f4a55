"""scikit-learn style front ends for the solvers.

The estimators hold the problem definition as constructor parameters, so
``get_params`` / ``set_params`` / ``clone`` work as usual; ``fit`` solves
and ``predict`` evaluates the fitted feedback rule at ``(time, state)``
points, one row per query.
"""
import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .equilibrium import solve_equilibrium
from .exceptions import DomainError
from .grids import ControlGrid, Grids, StateGrid, TimeGrid
from .hjb import FdScheme, solve_hjb_fd
from .model import validate_params
from .payoffs import continuation_value
from .pic import backward_value, duopoly_value, signaling_reward


def check_points(X):
    """Validate an ``(n, 2)`` array of ``(time, state)`` query points."""
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    if X.shape[1] != 2:
        raise DomainError(f"expected (time, state) columns, got {X.shape[1]} columns", "X")
    if np.any(X[:, 0] < 0) or np.any(X[:, 1] < 0):
        raise DomainError("times and states must be nonnegative", "X")
    return X


class _GridMixin:
    def _build_grids(self):
        return Grids(TimeGrid(self.horizon, self.n_steps),
                     StateGrid.build(self.x_min, self.x_max, self.n_nodes, self.spacing),
                     ControlGrid(self.control_levels))


class PathIntegralController(_GridMixin, BaseEstimator):
    """Feedback control by path-integral (Gaussian kernel) backward induction.

    ``problem="incumbent"`` solves the weak incumbent's signaling problem
    without entry; ``problem="entrant"`` the entrant's post-entry problem.
    """

    def __init__(self, params=None, market=None, problem="incumbent", horizon=1.0,
                 n_steps=40, x_min=0.3, x_max=4.0, n_nodes=80, spacing="uniform",
                 control_levels=(0.0, 0.25, 0.5, 0.75, 1.0), epsilon=0.0):
        self.params = params
        self.market = market
        self.problem = problem
        self.horizon = horizon
        self.n_steps = n_steps
        self.x_min = x_min
        self.x_max = x_max
        self.n_nodes = n_nodes
        self.spacing = spacing
        self.control_levels = control_levels
        self.epsilon = epsilon

    def _problem(self, grids):
        m, p = self.market, self.params
        if self.problem == "incumbent":
            return duopoly_value(grids.state, m, p), signaling_reward(m, self.epsilon), 1
        if self.problem == "entrant":
            term = continuation_value(grids.state.nodes, 0.0, 0.0, m.D_E_w, p, m.gamma)
            return term, (lambda x, u: (m.D_E_w - u * u) * x), 2
        raise DomainError(f"unknown problem {self.problem!r}", "problem")

    def _solve(self, grids, terminal, reward, player):
        return backward_value(grids, terminal, reward, self.market, self.params, player=player)

    def fit(self, X=None, y=None):
        if self.params is None or self.market is None:
            raise DomainError("params and market must be set before fit", "params")
        validate_params(self.params)
        grids = self._build_grids()
        terminal, reward, player = self._problem(grids)
        self.value_surface_, self.policy_ = self._solve(grids, terminal, reward, player)
        self.grids_ = grids
        return self

    def predict(self, X):
        check_is_fitted(self, "policy_")
        X = check_points(X)
        return self.policy_.lookup(X[:, 0], X[:, 1])

    def value(self, X):
        check_is_fitted(self, "value_surface_")
        X = check_points(X)
        return self.value_surface_.lookup(X[:, 0], X[:, 1])


class HJBController(PathIntegralController):
    """Same problems solved by the finite-difference HJB scheme."""

    def __init__(self, params=None, market=None, problem="incumbent", horizon=1.0,
                 n_steps=40, x_min=0.3, x_max=4.0, n_nodes=80, spacing="uniform",
                 control_levels=(0.0, 0.25, 0.5, 0.75, 1.0), epsilon=0.0,
                 time_stepping="implicit", cfl_safety=1.0):
        super().__init__(params, market, problem, horizon, n_steps, x_min, x_max, n_nodes,
                         spacing, control_levels, epsilon)
        self.time_stepping = time_stepping
        self.cfl_safety = cfl_safety

    def _solve(self, grids, terminal, reward, player):
        scheme = FdScheme(self.time_stepping, cfl_safety=self.cfl_safety)
        return solve_hjb_fd(self.market, self.params, grids, terminal, reward, scheme,
                            player=player)


class EntryDeterrenceGame(_GridMixin, BaseEstimator):
    """Best-response equilibrium of the entry / revelation game.

    After ``fit``, ``solution_`` holds the full :class:`EquilibriumSolution`.
    ``predict`` returns the incumbent's signaling control, while
    ``predict_entry`` and ``predict_revelation`` return the two stopping
    decisions.
    """

    def __init__(self, params=None, market=None, x0=2.0, horizon=1.0, n_steps=40,
                 x_min=0.3, x_max=4.0, n_nodes=80, spacing="uniform",
                 control_levels=(0.0, 0.25, 0.5, 0.75, 1.0), max_iter=50, tol=1e-4,
                 damping=1.0, epsilon=0.0, hazard=0.0, n_paths=10_000, seed=0, threads=None):
        self.params = params
        self.market = market
        self.x0 = x0
        self.horizon = horizon
        self.n_steps = n_steps
        self.x_min = x_min
        self.x_max = x_max
        self.n_nodes = n_nodes
        self.spacing = spacing
        self.control_levels = control_levels
        self.max_iter = max_iter
        self.tol = tol
        self.damping = damping
        self.epsilon = epsilon
        self.hazard = hazard
        self.n_paths = n_paths
        self.seed = seed
        self.threads = threads

    def fit(self, X=None, y=None):
        if self.params is None or self.market is None:
            raise DomainError("params and market must be set before fit", "params")
        self.grids_ = self._build_grids()
        self.solution_ = solve_equilibrium(
            self.market, self.params, self.grids_, self.x0, max_iter=self.max_iter,
            tol=self.tol, damping=self.damping, epsilon=self.epsilon, hazard=self.hazard,
            n_paths=self.n_paths, seed=self.seed, threads=self.threads)
        return self

    def predict(self, X):
        check_is_fitted(self, "solution_")
        X = check_points(X)
        return self.solution_.incumbent_policy.lookup(X[:, 0], X[:, 1])

    def predict_entry(self, X):
        check_is_fitted(self, "solution_")
        X = check_points(X)
        return self.solution_.entrant_entry_rule.in_region(X[:, 0], X[:, 1])

    def predict_revelation(self, X):
        check_is_fitted(self, "solution_")
        X = check_points(X)
        return self.solution_.revelation_rule.in_region(X[:, 0], X[:, 1])
