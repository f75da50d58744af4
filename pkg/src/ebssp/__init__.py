"""EB-SSP: optimistic value iteration with goal skewing for online stochastic shortest path."""
from .mdp import (CostDistribution, CostPerturbation, SspMdp, make_loop_chain, make_one_step,
                  make_random_ssp, step, validate_mdp)
from .oracle import OptimalSolution, PolicyStats, empirical_regret, optimal_values, policy_stats
from .visgo import Counters, SkewedModel, VisgoOutcome, apply_operator, bonus, skew, solve, variance
from .learner import LearnerConfig, LearnerState, RunLog, act, eta_for_config, observe, run
from .parameter_free import c_bound, episode_increment, run_parameter_free

__version__ = "0.1.0"
