"""EB-SSP online learner: greedy play on optimistic Q-values with doubling-trigger replanning."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import visgo
from .mdp import CostPerturbation, SspMdp

DEFAULT_T_MAX = 10_000_000


@dataclass(frozen=True)
class LearnerConfig:
    B: float = 1.0
    eta: float = 0.0
    delta: float = 0.1
    bonus_mode: str = "standard"
    T_max: int = DEFAULT_T_MAX
    K: int = 100
    log_steps: bool = False
    eps_floor: float = visgo.EPS_FLOOR

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.T_max <= 0:
            raise ValueError("T_max must be positive")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.B <= 0:
            raise ValueError("B must be positive")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")
        if self.bonus_mode not in ("standard", "appC"):
            raise ValueError(f"unknown bonus mode {self.bonus_mode!r}")


@dataclass
class LearnerState:
    counters: visgo.Counters
    q: np.ndarray
    v: np.ndarray
    j: int = 0
    t: int = 0
    k: int = 0
    last_outcome: visgo.VisgoOutcome | None = None

    @classmethod
    def fresh(cls, S: int, A: int) -> "LearnerState":
        return cls(visgo.Counters(S, A), np.zeros((S, A)), np.zeros(S))


@dataclass
class RunLog:
    episode_costs: list = field(default_factory=list)
    episode_steps: list = field(default_factory=list)
    episode_triggers: list = field(default_factory=list)
    episode_b_tilde: list = field(default_factory=list)
    steps: list | None = None
    b_tilde_trajectory: list = field(default_factory=list)
    phases: list | None = None
    status: str = "completed"
    total_steps: int = 0
    visgo_calls: int = 0

    def to_dict(self) -> dict:
        d = {
            "status": self.status,
            "total_steps": self.total_steps,
            "visgo_calls": self.visgo_calls,
            "episode_costs": self.episode_costs,
            "episode_steps": self.episode_steps,
            "episode_triggers": self.episode_triggers,
        }
        if self.b_tilde_trajectory:
            d["b_tilde_trajectory"] = self.b_tilde_trajectory
        if self.phases is not None:
            d["phases"] = self.phases
        if self.steps is not None:
            d["steps"] = self.steps
        return d


def act(state: LearnerState, s: int) -> int:
    """Greedy action minimising the optimistic Q-value; lowest index wins ties."""
    return int(np.argmin(state.q[s]))


def replan(state: LearnerState, B: float, delta: float, mode: str,
           range_limit: float | None = None, eps_floor: float = visgo.EPS_FLOOR,
           hook: Callable | None = None) -> visgo.VisgoOutcome:
    """Bump the trigger index, run VISGO at precision 2^-j and install its output."""
    state.j += 1
    model = visgo.SkewedModel.from_counters(state.counters, B, delta, mode)
    # 2^-j underflows past j = 1074; the float floor in solve() applies long before
    eps_vi = math.ldexp(1.0, -min(state.j, 1000))
    out = visgo.solve(model, eps_vi, range_limit=range_limit, eps_floor=eps_floor)
    state.q, state.v = out.q, out.v
    state.last_outcome = out
    if hook is not None:
        hook(state, model, out)
    return out


def observe(state: LearnerState, s: int, a: int, cost: float, s_next: int, B: float,
            delta: float, mode: str = "standard", range_limit: float | None = None,
            eps_floor: float = visgo.EPS_FLOOR, hook: Callable | None = None):
    """Record a perturbed transition; on a doubling trigger snapshot (s, a) and replan.

    Returns the VISGO outcome when a trigger fired, else None.
    """
    count = state.counters.record_step(s, a, cost, s_next)
    if not visgo.is_trigger(count):
        return None
    state.counters.snapshot(s, a)
    return replan(state, B, delta, mode, range_limit, eps_floor, hook)


def eta_for_config(kind: str, K: int, n_exponent: float | None = None,
                   T_bar: float | None = None) -> float:
    """Cost perturbation suited to the cost regime of the problem."""
    if K < 1:
        raise ValueError("K must be >= 1")
    if kind == "positive_costs":
        return 0.0
    if kind == "general_unknown_T":
        if n_exponent is None or n_exponent <= 1:
            raise ValueError("general_unknown_T needs n_exponent > 1")
        return float(K) ** (-n_exponent)
    if kind == "general_orderT":
        if T_bar is None or T_bar <= 0:
            raise ValueError("general_orderT needs T_bar > 0")
        return 1.0 / (T_bar * K)
    raise ValueError(f"unknown perturbation config {kind!r}")


def run(config: LearnerConfig, mdp: SspMdp, seed: int, hook: Callable | None = None) -> RunLog:
    """Play ``config.K`` episodes from s0 with known-B EB-SSP.

    ``hook(state, model, outcome)`` is called after every VISGO call.
    Logged episode costs are the unperturbed samples; the learner sees
    ``max(sample, eta)``.
    """
    rng = np.random.default_rng(seed)
    perturb = CostPerturbation(config.eta)
    state = LearnerState.fresh(mdp.num_states, mdp.num_actions)
    log = RunLog(steps=[] if config.log_steps else None)
    goal = mdp.goal
    for k in range(1, config.K + 1):
        state.k = k
        s = mdp.s0
        ep_cost, ep_steps, j0 = 0.0, 0, state.j
        while s != goal:
            if state.t >= config.T_max:
                log.status = "step_cap_hit"
                break
            a = act(state, s)
            raw, s_next = mdp.draw(rng, s, a)
            state.t += 1
            ep_cost += raw
            ep_steps += 1
            if log.steps is not None:
                log.steps.append((k, s, a, raw, s_next))
            observe(state, s, a, perturb.apply(raw), s_next, config.B, config.delta,
                    config.bonus_mode, eps_floor=config.eps_floor, hook=hook)
            s = s_next
        log.episode_costs.append(ep_cost)
        log.episode_steps.append(ep_steps)
        log.episode_triggers.append(state.j - j0)
        log.episode_b_tilde.append(config.B)
        if log.status == "step_cap_hit":
            break
    log.total_steps = state.t
    log.visgo_calls = state.j
    return log
