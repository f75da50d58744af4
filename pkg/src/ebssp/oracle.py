"""Exact planning on the true model: V*, Q*, pi*, B*, T*, policy evaluation, regret."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mdp import SspMdp


class OracleError(RuntimeError):
    pass


@dataclass
class PolicyStats:
    v_pi: np.ndarray
    t_pi: np.ndarray
    proper: bool


@dataclass
class OptimalSolution:
    v_star: np.ndarray
    q_star: np.ndarray
    pi_star: np.ndarray
    b_star: float
    t_star: float
    iterations: int
    eta_oracle: float

    def to_dict(self) -> dict:
        return {
            "V_star": self.v_star.tolist(),
            "Q_star": self.q_star.tolist(),
            "pi_star": self.pi_star.tolist(),
            "B_star": self.b_star,
            "T_star": self.t_star,
        }


def greedy(q: np.ndarray) -> np.ndarray:
    # np.argmin returns the first minimiser: lowest action index wins ties
    return np.argmin(q, axis=1)


def optimal_values(mdp: SspMdp, tol: float = 1e-10, eta_oracle: float = 1e-9,
                   max_iter: int = 1_000_000) -> OptimalSolution:
    """Value iteration from V = 0 on costs ``max(c, eta_oracle)``.

    The perturbation makes every improper policy infinitely costly so the
    iteration converges to the best proper policy; the returned values
    overestimate the unperturbed V* by at most ``eta_oracle * T*``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    P = mdp.transitions[:, :, :-1]
    c = np.maximum(mdp.mean_costs, eta_oracle)
    v = np.zeros(mdp.num_states)
    for it in range(1, max_iter + 1):
        q = c + P @ v
        v_new = q.min(axis=1)
        delta = np.abs(v_new - v).max()
        v = v_new
        if delta < tol:
            break
    else:
        raise OracleError(f"value iteration did not converge in {max_iter} sweeps; "
                          "is the goal reachable under some policy?")
    q = c + P @ v
    v = q.min(axis=1)
    pi = greedy(q)
    stats = policy_stats(mdp, pi)
    if not stats.proper:
        raise OracleError("greedy policy extracted from V* is improper")
    return OptimalSolution(v, q, pi, float(v.max()), float(stats.t_pi.max()), it, eta_oracle)


def goal_probability(P_pi: np.ndarray, tol: float = 1e-13, max_doublings: int = 64) -> np.ndarray:
    """Probability of eventually hitting the goal under the sub-stochastic chain ``P_pi``.

    Uses repeated squaring: after ``n`` rounds ``h`` sums ``P^k r`` for ``k < 2**n``.
    """
    h = 1.0 - P_pi.sum(axis=1)
    M = P_pi.copy()
    for _ in range(max_doublings):
        h_new = np.minimum(h + M @ h, 1.0)
        if np.abs(h_new - h).max() < tol:
            return h_new
        h = h_new
        M = M @ M
    return h


def policy_stats(mdp: SspMdp, pi) -> PolicyStats:
    """Value and expected hitting time of a deterministic policy by linear solves."""
    pi = np.asarray(pi, dtype=int)
    S = mdp.num_states
    if pi.shape != (S,):
        raise ValueError(f"policy must give one action per state, got shape {pi.shape}")
    idx = np.arange(S)
    P_pi = mdp.transitions[idx, pi, :-1]
    c_pi = mdp.mean_costs[idx, pi]
    hit = goal_probability(P_pi)
    if (hit < 1.0 - 1e-9).any():
        inf = np.full(S, np.inf)
        return PolicyStats(inf.copy(), inf, False)
    M = np.eye(S) - P_pi
    try:
        v = np.linalg.solve(M, c_pi)
        t = np.linalg.solve(M, np.ones(S))
    except np.linalg.LinAlgError as e:
        raise OracleError(f"singular system for a proper policy: {e}") from e
    return PolicyStats(v, t, True)


def empirical_regret(run_costs, v_star_s0: float) -> np.ndarray:
    """Cumulative regret after each episode: sum of costs minus k * V*(s0)."""
    costs = np.asarray(run_costs, dtype=np.float64)
    k = np.arange(1, costs.size + 1)
    return np.cumsum(costs) - k * v_star_s0
