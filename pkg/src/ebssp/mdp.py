"""Tabular SSP-MDPs: representation, validation, sampling and instance generators.

States are ``0..S-1``; the goal is the virtual index ``S`` (last column of the
transition tensor). No row is stored for the goal: it is absorbing and free.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

ROW_TOL = 1e-12
COST_KINDS = ("deterministic", "bernoulli")


@dataclass(frozen=True)
class CostDistribution:
    kind: str = "deterministic"
    mean: float = 0.0

    def __post_init__(self):
        if self.kind not in COST_KINDS:
            raise ValueError(f"unknown cost kind {self.kind!r}")
        if not 0.0 <= self.mean <= 1.0:
            raise ValueError(f"cost mean {self.mean} outside [0, 1]")

    def sample(self, u: float) -> float:
        """Map a uniform draw ``u`` to a cost sample."""
        if self.kind == "deterministic":
            return self.mean
        return 1.0 if u < self.mean else 0.0


@dataclass(frozen=True)
class CostPerturbation:
    eta: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta={self.eta} outside [0, 1]")

    def apply(self, cost: float) -> float:
        return max(cost, self.eta)


@dataclass(frozen=True, eq=False)
class SspMdp:
    """Ground-truth SSP model.

    ``transitions`` has shape (S, A, S+1); column ``S`` is the goal.
    ``costs`` is a nested S x A sequence of :class:`CostDistribution`.
    """

    transitions: np.ndarray
    costs: tuple
    s0: int = 0
    _cdf: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        P = np.array(self.transitions, dtype=np.float64)
        if P.ndim != 3 or P.shape[2] != P.shape[0] + 1:
            raise ValueError(f"transitions must have shape (S, A, S+1), got {P.shape}")
        P.setflags(write=False)
        costs = tuple(tuple(row) for row in self.costs)
        if len(costs) != P.shape[0] or any(len(r) != P.shape[1] for r in costs):
            raise ValueError("costs must be an S x A table")
        if not 0 <= self.s0 < P.shape[0]:
            raise ValueError(f"s0={self.s0} out of range")
        object.__setattr__(self, "transitions", P)
        object.__setattr__(self, "costs", costs)
        cdf = np.cumsum(P, axis=2)
        cdf[..., -1] = 1.0
        cdf.setflags(write=False)
        object.__setattr__(self, "_cdf", cdf)

    @property
    def num_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def num_actions(self) -> int:
        return self.transitions.shape[1]

    @property
    def goal(self) -> int:
        return self.transitions.shape[0]

    @property
    def mean_costs(self) -> np.ndarray:
        return np.array([[c.mean for c in row] for row in self.costs], dtype=np.float64)

    def draw(self, rng: np.random.Generator, s: int, a: int) -> tuple[float, int]:
        """Unperturbed cost sample and next state for one step from ``(s, a)``."""
        if not 0 <= s < self.num_states:
            raise ValueError(f"cannot step from state {s} (goal is {self.goal})")
        if not 0 <= a < self.num_actions:
            raise ValueError(f"action {a} out of range")
        u_next, u_cost = rng.random(2)
        nxt = int(np.searchsorted(self._cdf[s, a], u_next, side="right"))
        # guard against trailing zero-probability columns after the cumsum
        while self.transitions[s, a, nxt] == 0.0:
            nxt -= 1
        return self.costs[s][a].sample(u_cost), nxt

    # serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "S": self.num_states,
            "A": self.num_actions,
            "s0": self.s0,
            "transitions": self.transitions.tolist(),
            "costs": [[{"kind": c.kind, "mean": c.mean} for c in row] for row in self.costs],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SspMdp":
        P = np.asarray(d["transitions"], dtype=np.float64)
        S, A = int(d["S"]), int(d["A"])
        if P.shape != (S, A, S + 1):
            raise ValueError(f"transitions shape {P.shape} does not match S={S}, A={A}")
        raw = d["costs"]
        # accept a flat S*A list as well as a nested S x A table
        if len(raw) == S * A and all(isinstance(c, dict) for c in raw):
            raw = [raw[s * A:(s + 1) * A] for s in range(S)]
        costs = [[CostDistribution(c.get("kind", "deterministic"), float(c["mean"])) for c in row]
                 for row in raw]
        return cls(P, costs, int(d.get("s0", 0)))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "SspMdp":
        return cls.from_dict(json.loads(Path(path).read_text()))


def step(mdp: SspMdp, rng: np.random.Generator, s: int, a: int,
         perturb: CostPerturbation = CostPerturbation()) -> tuple[float, int]:
    """Take one environment step; the returned cost is ``max(sample, eta)``."""
    cost, nxt = mdp.draw(rng, s, a)
    return perturb.apply(cost), nxt


def goal_reachable(P: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Per-state flag: some policy reaches the goal with positive probability."""
    S = P.shape[0]
    reach = np.zeros(S + 1, dtype=bool)
    reach[S] = True
    while True:
        new = reach.copy()
        new[:S] |= ((P[:, :, reach] > tol).any(axis=2)).any(axis=1)
        if (new == reach).all():
            return reach[:S]
        reach = new


def validate_mdp(mdp: SspMdp) -> list[str]:
    """Return every invariant violation found in ``mdp`` (empty list when valid)."""
    problems = []
    P = mdp.transitions
    S, A = mdp.num_states, mdp.num_actions
    for s in range(S):
        for a in range(A):
            row = P[s, a]
            if (row < 0).any() or (row > 1).any():
                problems.append(f"transition row ({s},{a}) has entries outside [0, 1]")
            total = row.sum()
            if abs(total - 1.0) > ROW_TOL:
                problems.append(f"transition row ({s},{a}) sums to {total!r}, not 1")
            if not 0.0 <= mdp.costs[s][a].mean <= 1.0:
                problems.append(f"cost mean at ({s},{a}) outside [0, 1]")
    reach = goal_reachable(P)
    if not reach.all():
        bad = np.flatnonzero(~reach).tolist()
        problems.append(f"warning: goal unreachable under every policy from states {bad}")
    return problems


def make_loop_chain(S: int, p_min: float) -> SspMdp:
    """Single-action chain where B* = 1 but T* grows like S / p_min.

    Indices: 0 is s0, ``1..S-2`` form the zero-cost loop back to s0, ``S-1``
    is the exit state whose move to the goal costs 1.
    """
    if S < 3:
        raise ValueError("loop chain needs S >= 3")
    if not 0.0 < p_min <= 1.0:
        raise ValueError("p_min must lie in (0, 1]")
    exit_state = S - 1
    P = np.zeros((S, 1, S + 1))
    P[0, 0, exit_state] = p_min
    P[0, 0, 1 if S > 2 else 0] += 1.0 - p_min
    for s in range(1, S - 1):
        P[s, 0, s + 1 if s + 1 < S - 1 else 0] = 1.0
    P[exit_state, 0, S] = 1.0
    costs = [[CostDistribution("deterministic", 0.0)] for _ in range(S)]
    costs[exit_state] = [CostDistribution("deterministic", 1.0)]
    return SspMdp(P, costs, 0)


def make_random_ssp(S: int, A: int, goal_prob_floor: float, cost_low: float = 0.0,
                    cost_high: float = 1.0, seed: int = 0, cost_kind: str = "deterministic") -> SspMdp:
    """Random dense SSP where every (s, a) reaches the goal w.p. >= goal_prob_floor."""
    if S < 1 or A < 1:
        raise ValueError("need S >= 1 and A >= 1")
    if not 0.0 < goal_prob_floor <= 1.0:
        raise ValueError("goal_prob_floor must lie in (0, 1]")
    if not 0.0 <= cost_low <= cost_high <= 1.0:
        raise ValueError("need 0 <= cost_low <= cost_high <= 1")
    rng = np.random.default_rng(seed)
    raw = rng.random((S, A, S + 1))
    P = (1.0 - goal_prob_floor) * raw / raw.sum(axis=2, keepdims=True)
    P[:, :, S] += goal_prob_floor
    # put the rounding residue on the goal column so rows sum to 1 exactly
    P[:, :, S] += 1.0 - P.sum(axis=2)
    means = rng.uniform(cost_low, cost_high, size=(S, A))
    costs = [[CostDistribution(cost_kind, float(means[s, a])) for a in range(A)] for s in range(S)]
    return SspMdp(P, costs, 0)


def make_one_step(costs: Sequence[Sequence[float]]) -> SspMdp:
    """MDP where every action jumps straight to the goal."""
    c = np.asarray(costs, dtype=np.float64)
    S, A = c.shape
    P = np.zeros((S, A, S + 1))
    P[:, :, S] = 1.0
    return SspMdp(P, [[CostDistribution("deterministic", float(c[s, a])) for a in range(A)]
                      for s in range(S)], 0)
