import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ebssp.learner import LearnerConfig, LearnerState, act, eta_for_config, observe, run
from ebssp.mdp import make_loop_chain, make_one_step, make_random_ssp
from ebssp.oracle import empirical_regret, optimal_values


def state_with_q(q):
    q = np.atleast_2d(np.asarray(q, dtype=float))
    st_ = LearnerState.fresh(q.shape[0], q.shape[1])
    st_.q = q
    return st_


def test_act_picks_argmin():
    assert act(state_with_q([0.5, 0.2, 0.9]), 0) == 1


def test_act_tie_break_lowest_index():
    assert act(state_with_q([0.0, 0.0, 0.0]), 0) == 0


@settings(max_examples=50, deadline=None)
@given(q=st.lists(st.floats(0, 10), min_size=1, max_size=6), scale=st.floats(1e-3, 1e3))
def test_act_scale_invariant(q, scale):
    assert act(state_with_q(q), 0) == act(state_with_q(np.asarray(q) * scale), 0)


def test_fresh_state_plays_action_zero():
    assert act(LearnerState.fresh(3, 4), 2) == 0


def test_observe_trigger_schedule():
    S, A = 2, 2
    state = LearnerState.fresh(S, A)
    fired = []
    for i in range(1, 5):
        out = observe(state, 0, 1, 0.3, S, B=1.0, delta=0.1)
        fired.append(out is not None)
        if out is not None:
            assert out.eps_vi == 2.0 ** -state.j
    # N = 1, 2, 3, 4: powers of two trigger, 3 does not
    assert fired == [True, True, False, True]
    assert state.j == 3
    assert state.counters.n[0, 1] == 4


def test_observe_eps_halves_between_triggers():
    state = LearnerState.fresh(1, 1)
    eps = []
    for _ in range(4):
        out = observe(state, 0, 0, 0.5, 1, B=1.0, delta=0.1)
        if out is not None:
            eps.append(out.eps_vi)
    assert eps == [0.5, 0.25, 0.125]


def test_observe_replaces_q_immediately():
    state = LearnerState.fresh(1, 2)
    for _ in range(20_000):
        observe(state, 0, 0, 1.0, 1, B=1.0, delta=0.1)
    # lots of cost-1 evidence on action 0 makes it optimistic-worse than unvisited action 1
    assert state.q[0, 0] > 0.0 == state.q[0, 1]
    assert act(state, 0) == 1


def test_eta_for_config_examples():
    assert eta_for_config("positive_costs", 100) == 0.0
    assert eta_for_config("general_unknown_T", 100, n_exponent=2) == pytest.approx(1e-4)
    assert eta_for_config("general_orderT", 1000, T_bar=50) == pytest.approx(2e-5)


@pytest.mark.parametrize("args", [
    ("general_unknown_T", 100, 1.0, None),
    ("general_unknown_T", 100, None, None),
    ("general_orderT", 100, None, 0.0),
    ("nonsense", 100, None, None),
    ("positive_costs", 0, None, None),
])
def test_eta_for_config_rejects(args):
    with pytest.raises(ValueError):
        eta_for_config(*args)


def test_config_validation():
    with pytest.raises(ValueError):
        LearnerConfig(delta=1.0)
    with pytest.raises(ValueError):
        LearnerConfig(bonus_mode="fancy")
    with pytest.raises(ValueError):
        LearnerConfig(K=0)


def test_one_step_mdp_single_step_episodes():
    log = run(LearnerConfig(K=50), make_one_step([[0.3, 0.7], [0.1, 0.2]]), seed=0)
    assert log.episode_steps == [1] * 50
    assert log.status == "completed"


def test_one_step_learns_cheap_action():
    mdp = make_one_step([[0.9, 0.1]])
    log = run(LearnerConfig(K=3000, log_steps=True), mdp, seed=0)
    late = [a for (k, _, a, _, _) in log.steps if k > 2500]
    assert np.mean(np.array(late) == 1) > 0.9


def test_run_deterministic():
    mdp = make_random_ssp(4, 2, 0.2, 0.1, 1.0, seed=3)
    cfg = LearnerConfig(B=2.0, K=100, log_steps=True)
    a = json.dumps(run(cfg, mdp, seed=7).to_dict())
    b = json.dumps(run(cfg, mdp, seed=7).to_dict())
    assert a == b


def test_step_cap_returns_partial_log():
    log = run(LearnerConfig(K=1000, T_max=25), make_loop_chain(5, 0.05), seed=0)
    assert log.status == "step_cap_hit"
    assert log.total_steps == 25
    assert sum(log.episode_steps) == 25
    assert len(log.episode_costs) <= 1000


def test_trace_invariants():
    mdp = make_random_ssp(4, 2, 0.15, 0.1, 1.0, seed=5)
    S, A = mdp.num_states, mdp.num_actions
    seen = {"calls": 0, "N": np.zeros((S, A), dtype=np.int64), "n": np.zeros((S, A), dtype=np.int64)}

    def hook(state, model, out):
        seen["calls"] += 1
        assert state.j == seen["calls"]
        N, n = state.counters.N, state.counters.n
        assert (N >= seen["N"]).all()
        changed = n != seen["n"]
        # exactly one pair is snapshotted per trigger and its n doubles (or starts at 1)
        assert changed.sum() == 1
        old, new = seen["n"][changed][0], n[changed][0]
        assert new == (1 if old == 0 else 2 * old)
        seen["N"], seen["n"] = N.copy(), n.copy()

    log = run(LearnerConfig(B=2.0, K=200, log_steps=True), mdp, seed=1, hook=hook)
    assert seen["calls"] == log.visgo_calls == sum(log.episode_triggers)

    by_ep = {}
    for k, s, a, c, s_next in log.steps:
        by_ep.setdefault(k, []).append((s, s_next))
    for k, trans in by_ep.items():
        assert trans[0][0] == mdp.s0
        assert trans[-1][1] == mdp.goal
        assert all(s_next != mdp.goal for _, s_next in trans[:-1])
        assert all(trans[i][1] == trans[i + 1][0] for i in range(len(trans) - 1))


def test_regret_matches_step_log():
    mdp = make_random_ssp(3, 2, 0.2, 0.1, 1.0, seed=2, cost_kind="bernoulli")
    sol = optimal_values(mdp)
    log = run(LearnerConfig(B=max(sol.b_star, 1.0), K=100, log_steps=True), mdp, seed=4)
    per_ep = np.zeros(100)
    for k, _, _, c, _ in log.steps:
        per_ep[k - 1] += c
    assert np.allclose(per_ep, log.episode_costs)
    R = empirical_regret(log.episode_costs, sol.v_star[0])
    assert R[-1] == pytest.approx(per_ep.sum() - 100 * sol.v_star[0], abs=1e-9)


def test_perturbation_only_affects_learner_view():
    mdp = make_one_step([[0.0]])
    log = run(LearnerConfig(K=5, eta=0.01), mdp, seed=0)
    assert log.episode_costs == [0.0] * 5


def test_optimistic_on_small_mdp(three_state_mdp):
    sol = optimal_values(three_state_mdp)
    worst = []

    def hook(state, model, out):
        worst.append(float((out.q - sol.q_star).max()))

    run(LearnerConfig(B=max(sol.b_star, 1.0), K=300), three_state_mdp, seed=0, hook=hook)
    assert max(worst) <= 1e-6


def loop_chain_mean_regret(K=2000, seeds=30):
    mdp = make_loop_chain(5, 0.2)
    v0 = optimal_values(mdp).v_star[0]
    return np.mean([empirical_regret(run(LearnerConfig(B=1.0, K=K), mdp, seed).episode_costs, v0)
                    for seed in range(seeds)], axis=0)


@pytest.mark.slow
def test_loop_chain_regret_is_zero_up_to_oracle_bias():
    # single action: every episode costs exactly 1, so the only regret is the
    # eta_oracle bias of V*(s0), at most 1e-9 * T* per episode
    R = loop_chain_mean_regret()
    K = np.arange(1, len(R) + 1)
    T_star = optimal_values(make_loop_chain(5, 0.2)).t_star
    assert np.all(np.abs(R) <= 1e-9 * T_star * K + 1e-9)


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="the loop chain has one action, so its regret is identically "
                                       "zero up to oracle bias and cannot be positive")
def test_loop_chain_regret_positive_and_rate_decreasing():
    R = loop_chain_mean_regret()
    grid = [100, 250, 500, 1000, 2000]
    rates = [R[K - 1] / K for K in grid]
    assert R[-1] > 0
    assert all(b < a for a, b in zip(rates, rates[1:]))
