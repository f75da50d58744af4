import itertools

import numpy as np
import pytest

from ebssp.mdp import CostDistribution, SspMdp, make_loop_chain, make_one_step, make_random_ssp
from ebssp.oracle import OracleError, empirical_regret, optimal_values, policy_stats


def enumerate_policies(mdp):
    """V* by brute force: solve the linear system of every deterministic proper policy."""
    S, A = mdp.num_states, mdp.num_actions
    best = np.full(S, np.inf)
    for pi in itertools.product(range(A), repeat=S):
        P = np.array([mdp.transitions[s, pi[s], :S] for s in range(S)])
        c = np.array([mdp.costs[s][pi[s]].mean for s in range(S)])
        if np.abs(np.linalg.matrix_power(P, 200)).max() > 1e-6:
            continue  # improper
        best = np.minimum(best, np.linalg.solve(np.eye(S) - P, c))
    return best


def test_one_state_one_step():
    sol = optimal_values(make_one_step([[0.4]]))
    assert sol.v_star[0] == pytest.approx(0.4)
    assert sol.b_star == pytest.approx(0.4)
    assert sol.t_star == pytest.approx(1.0)


def test_loop_chain_b_star_is_one():
    sol = optimal_values(make_loop_chain(5, 0.5))
    assert sol.v_star[0] == pytest.approx(1.0, abs=1e-6)
    assert sol.b_star == pytest.approx(1.0, abs=1e-6)


def test_three_state_matches_enumeration(three_state_mdp):
    sol = optimal_values(three_state_mdp)
    assert np.allclose(sol.v_star, enumerate_policies(three_state_mdp), atol=1e-6)


def test_solution_invariants(three_state_mdp):
    sol = optimal_values(three_state_mdp, tol=1e-11)
    P = three_state_mdp.transitions[:, :, :-1]
    c = np.maximum(three_state_mdp.mean_costs, sol.eta_oracle)
    assert np.allclose(sol.v_star, sol.q_star.min(axis=1))
    resid = np.abs(sol.v_star - (c + P @ sol.v_star).min(axis=1)).max()
    assert resid < 10 * 1e-11
    assert sol.b_star <= sol.t_star
    assert sol.pi_star.tolist() == np.argmin(sol.q_star, axis=1).tolist()


@pytest.mark.parametrize("seed", range(5))
def test_greedy_policy_value_close_to_v_star(seed):
    mdp = make_random_ssp(5, 3, 0.1, 0.0, 1.0, seed=seed)
    tol, eta = 1e-10, 1e-9
    sol = optimal_values(mdp, tol, eta)
    st = policy_stats(mdp, sol.pi_star)
    assert (st.v_pi <= sol.v_star + eta * st.t_pi + 10 * tol).all()


def test_policy_stats_two_step_chain():
    P = np.zeros((2, 1, 3))
    P[0, 0, 1] = 1.0
    P[1, 0, 2] = 1.0
    mdp = SspMdp(P, [[CostDistribution("deterministic", 0.5)]] * 2)
    st = policy_stats(mdp, [0, 0])
    assert st.proper
    assert st.v_pi[0] == pytest.approx(1.0)
    assert st.t_pi[0] == pytest.approx(2.0)


def test_policy_stats_improper():
    P = np.zeros((2, 2, 3))
    P[0, 0, 0] = 1.0      # self loop, no goal mass
    P[0, 1, 2] = 1.0
    P[1, :, 2] = 1.0
    mdp = SspMdp(P, [[CostDistribution("deterministic", 0.0)] * 2] * 2)
    st = policy_stats(mdp, [0, 0])
    assert not st.proper
    assert np.isinf(st.v_pi[0]) and np.isinf(st.t_pi[0])
    assert policy_stats(mdp, [1, 0]).proper


def test_policy_stats_matches_optimal_on_random():
    mdp = make_random_ssp(4, 2, 0.1, seed=3)
    sol = optimal_values(mdp)
    assert np.allclose(policy_stats(mdp, sol.pi_star).v_pi, sol.v_star, atol=1e-6)


def test_policy_stats_hitting_time_by_simulation(three_state_mdp):
    sol = optimal_values(three_state_mdp)
    st = policy_stats(three_state_mdp, sol.pi_star)
    rng = np.random.default_rng(2)
    lengths = []
    for _ in range(20_000):
        s, n = three_state_mdp.s0, 0
        while s != three_state_mdp.goal:
            _, s = three_state_mdp.draw(rng, s, int(sol.pi_star[s]))
            n += 1
        lengths.append(n)
    se = np.std(lengths) / np.sqrt(len(lengths))
    assert abs(np.mean(lengths) - st.t_pi[0]) < 3 * se


def test_zero_cost_cycle_needs_perturbation():
    # zero-cost loop on action 0: without perturbation value iteration stalls at 0
    P = np.zeros((1, 2, 2))
    P[0, 0, 0] = 1.0
    P[0, 1, 1] = 1.0
    mdp = SspMdp(P, [[CostDistribution("deterministic", 0.0), CostDistribution("deterministic", 0.5)]])
    with pytest.raises(OracleError):
        optimal_values(mdp, eta_oracle=0.0)
    with pytest.raises(OracleError):
        optimal_values(mdp, eta_oracle=1e-9, max_iter=1000)
    sol = optimal_values(mdp, eta_oracle=0.01)
    assert sol.pi_star[0] == 1 and sol.v_star[0] == pytest.approx(0.5)


def test_empirical_regret_zero():
    assert np.allclose(empirical_regret([0.7] * 5, 0.7), 0.0)


def test_empirical_regret_arithmetic():
    assert empirical_regret([2, 2], 1.0).tolist() == [1.0, 2.0]
