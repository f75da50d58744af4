"""Parameter-free EB-SSP: learn without knowing B*.

Play proceeds in phases with a running estimate B~ (starting at 1). A phase
ends when its cumulative cost exceeds :func:`c_bound` or when a VISGO sweep
leaves the range [0, B~]; B~ is then doubled and play resumes from the
current state. At each episode start B~ is also raised to
``sqrt(k) / (S^1.5 A^0.5)`` when that is larger. Statistics are never reset.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import visgo
from .learner import LearnerState, RunLog, act, replan, DEFAULT_T_MAX
from .mdp import CostPerturbation, SspMdp


def c_bound(k: int, t: int, B: float, S: int, A: int, delta: float, x: float) -> float:
    """Cumulative-cost threshold of a phase at episode ``k`` and time ``t``."""
    if k < 1 or t < 1:
        raise ValueError("need k >= 1 and t >= 1")
    lg = math.log2(2.0 * B * t * S * A / delta)
    return k * B + 3.0 * x * (B * math.sqrt(S * A * k) * lg + B * S * S * A * lg * lg)


def episode_increment(B: float, k: int, S: int, A: int) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    return max(B, math.sqrt(k) / (S ** 1.5 * A ** 0.5))


@dataclass
class PhaseState:
    B_tilde: float = 1.0
    phi: int = 1
    C: float = 0.0
    start: int = 0
    x: float = 6.0


@dataclass
class _Episode:
    cost: float = 0.0
    steps: int = 0
    j0: int = 0


@dataclass
class PhaseResult:
    exit: str            # "cost_halt", "range_halt", "run_complete" or "step_cap_hit"
    state: int           # where the next phase resumes
    k: int               # episode in which the next phase resumes
    B_tilde: float


@dataclass
class _Run:
    """Everything shared across phases of one parameter-free run."""

    mdp: SspMdp
    K: int
    delta: float
    rng: np.random.Generator
    perturb: CostPerturbation
    mode: str = "standard"
    T_max: int = DEFAULT_T_MAX
    eps_floor: float = visgo.EPS_FLOOR
    hook: Callable | None = None
    learner: LearnerState = None
    log: RunLog = field(default_factory=RunLog)
    episode: _Episode = field(default_factory=_Episode)

    def __post_init__(self):
        if self.learner is None:
            self.learner = LearnerState.fresh(self.mdp.num_states, self.mdp.num_actions)

    def set_b(self, ps: PhaseState, value: float, k: int, reason: str) -> None:
        ps.B_tilde = value
        self.log.b_tilde_trajectory.append(
            {"t": self.learner.t, "k": k, "B_tilde": value, "reason": reason})

    def replan(self, ps: PhaseState) -> visgo.VisgoOutcome:
        return replan(self.learner, ps.B_tilde, self.delta, self.mode,
                      range_limit=ps.B_tilde, eps_floor=self.eps_floor, hook=self.hook)

    def close_episode(self, B_tilde: float) -> None:
        ep = self.episode
        self.log.episode_costs.append(ep.cost)
        self.log.episode_steps.append(ep.steps)
        self.log.episode_triggers.append(self.learner.j - ep.j0)
        self.log.episode_b_tilde.append(B_tilde)
        self.episode = _Episode(j0=self.learner.j)


def run_phase(ps: PhaseState, run: _Run, start: int, k: int) -> PhaseResult:
    """Play from ``start`` in episode ``k`` until a halting condition or episode K ends."""
    mdp, L = run.mdp, run.learner
    S, A, goal = mdp.num_states, mdp.num_actions, mdp.goal
    ps.C = 0.0
    for k_cur in range(k, run.K + 1):
        L.k = k_cur
        s = start if k_cur == k else mdp.s0
        raised = math.sqrt(k_cur) / (S ** 1.5 * A ** 0.5)
        if raised > ps.B_tilde:
            run.set_b(ps, raised, k_cur, "episode")
            if not run.replan(ps).converged:
                return PhaseResult("range_halt", s, k_cur, ps.B_tilde)
        while s != goal:
            if L.t >= run.T_max:
                return PhaseResult("step_cap_hit", s, k_cur, ps.B_tilde)
            a = act(L, s)
            raw, s_next = mdp.draw(run.rng, s, a)
            c = run.perturb.apply(raw)
            L.t += 1
            run.episode.cost += raw
            run.episode.steps += 1
            if run.log.steps is not None:
                run.log.steps.append((k_cur, s, a, raw, s_next))
            count = L.counters.record_step(s, a, c, s_next)
            ps.C += c
            s_prev, s = s, s_next
            # the algorithm's clock starts at 1 and has already moved past this step
            if ps.C > c_bound(k_cur, L.t + 1, ps.B_tilde, S, A, run.delta, ps.x):
                return _halt(run, ps, "cost_halt", s, k_cur)
            if visgo.is_trigger(count):
                L.counters.snapshot(s_prev, a)
                if not run.replan(ps).converged:
                    return _halt(run, ps, "range_halt", s, k_cur)
        run.close_episode(ps.B_tilde)
    return PhaseResult("run_complete", mdp.s0, run.K + 1, ps.B_tilde)


def _halt(run: _Run, ps: PhaseState, reason: str, s: int, k_cur: int) -> PhaseResult:
    if s == run.mdp.goal:
        # the halting step finished the episode
        run.close_episode(ps.B_tilde)
        return PhaseResult(reason, run.mdp.s0, k_cur + 1, ps.B_tilde)
    return PhaseResult(reason, s, k_cur, ps.B_tilde)


def run_parameter_free(mdp: SspMdp, K: int, delta: float = 0.1, x: float = 6.0, seed: int = 0,
                       eta: float = 0.0, bonus_mode: str = "standard",
                       T_max: int = DEFAULT_T_MAX, log_steps: bool = False,
                       eps_floor: float = visgo.EPS_FLOOR, hook: Callable | None = None) -> RunLog:
    """Run K episodes of parameter-free EB-SSP; the log carries B~ and per-phase records."""
    if K < 1:
        raise ValueError("K must be >= 1")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if x <= 0:
        raise ValueError("x must be positive")
    run = _Run(mdp, K, delta, np.random.default_rng(seed), CostPerturbation(eta), bonus_mode,
               T_max, eps_floor, hook)
    run.log.steps = [] if log_steps else None
    run.log.phases = []
    ps = PhaseState(B_tilde=1.0, phi=1, start=mdp.s0, x=x)
    run.set_b(ps, 1.0, 1, "init")
    k = 1
    while True:
        B_start, k_start = ps.B_tilde, k
        res = run_phase(ps, run, ps.start, k)
        run.log.phases.append({
            "phi": ps.phi, "B_tilde": B_start, "B_tilde_end": res.B_tilde, "exit": res.exit,
            "episodes": [k_start, min(res.k, K)], "cost": ps.C,
        })
        if res.exit in ("run_complete", "step_cap_hit"):
            if res.exit == "step_cap_hit":
                run.log.status = "step_cap_hit"
                if run.episode.steps:
                    run.close_episode(ps.B_tilde)
            break
        if res.k > K:
            break
        ps.phi += 1
        ps.start, k = res.state, res.k
        run.set_b(ps, 2.0 * res.B_tilde, k, "doubling")
    log = run.log
    log.total_steps = run.learner.t
    log.visgo_calls = run.learner.j
    return log
