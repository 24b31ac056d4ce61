"""Reputational bargaining with commitment types and unobservable technology adoption."""
from .adoption import classify_regime, limit_equilibria_endogenous, rho_star
from .limiteq import i_star, limit_equilibrium_exogenous, pi_star
from .params import NonGenericError, ParamError, make_params, rubinstein_price
from .sim import StrategyProfile, estimate_outcomes, sample_path
from .verify import best_response_gap, verify_woa_indifference
from .woa import BeliefState, solve_woa, woa_payoffs

__version__ = "0.1.0"
