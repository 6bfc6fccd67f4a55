"""Entry deterrence under CKLS demand: path-integral control, an HJB
cross-check, and the entry / revelation stopping game."""
from .beliefs import BeliefState, belief_update, logit, posterior_prob
from .equilibrium import (EquilibriumSolution, entrant_best_response, incumbent_best_response,
                          simulate_game, solve_equilibrium)
from .estimators import EntryDeterrenceGame, HJBController, PathIntegralController
from .exceptions import (AssumptionError, CFLError, ConvergenceError, DeterrenceError,
                         DivergenceError, DomainError, GridMismatchError, ResolutionError,
                         SingularSystemError)
from .grids import ControlGrid, FeedbackPolicy, Grids, StateGrid, TimeGrid, ValueSurface
from .hjb import FdScheme, cross_validate, solve_hjb_fd
from .model import (CklsParams, PathEnsemble, diffusion, drift, simulate_paths, step_euler,
                    validate_params)
from .payoffs import (MarketPrimitives, check_assumptions, check_discount_bound,
                      continuation_value, entrant_payoff_mc, incumbent_payoff_mc)
from .pic import (backward_value, build_partition, euclidean_action, lagrangian_increment,
                  solve_incumbent)
from .stopping import StoppingRule, apply_mixing

__version__ = "0.1.0"

__all__ = [
    "BeliefState", "belief_update", "logit", "posterior_prob",
    "EquilibriumSolution", "entrant_best_response", "incumbent_best_response",
    "simulate_game", "solve_equilibrium",
    "EntryDeterrenceGame", "HJBController", "PathIntegralController",
    "AssumptionError", "CFLError", "ConvergenceError", "DeterrenceError", "DivergenceError",
    "DomainError", "GridMismatchError", "ResolutionError", "SingularSystemError",
    "ControlGrid", "FeedbackPolicy", "Grids", "StateGrid", "TimeGrid", "ValueSurface",
    "FdScheme", "cross_validate", "solve_hjb_fd",
    "CklsParams", "PathEnsemble", "diffusion", "drift", "simulate_paths", "step_euler",
    "validate_params",
    "MarketPrimitives", "check_assumptions", "check_discount_bound", "continuation_value",
    "entrant_payoff_mc", "incumbent_payoff_mc",
    "backward_value", "build_partition", "euclidean_action", "lagrangian_increment",
    "solve_incumbent",
    "StoppingRule", "apply_mixing",
]
