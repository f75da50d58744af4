"""VISGO: value iteration with slight goal optimism.

Empirical statistics (:class:`Counters`), goal-skewed transitions, the
variance-aware bonus and the truncated optimistic Bellman operator, iterated
from zero until the sup-norm change drops below the requested precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

C1 = 6.0
C2 = 36.0
C3 = 2.0 * math.sqrt(2.0)
C4 = 2.0 * math.sqrt(2.0)

# float64 cannot resolve sup-norm changes much below this on O(1) values
EPS_FLOOR = 1e-12


class ContractionViolation(RuntimeError):
    """VISGO ran past its guaranteed iteration bound."""


@dataclass
class Counters:
    """Learner statistics for S states, A actions and S+1 next states (goal last)."""

    S: int
    A: int
    N: np.ndarray = field(init=False)
    N3: np.ndarray = field(init=False)
    theta: np.ndarray = field(init=False)
    n: np.ndarray = field(init=False)
    p_hat: np.ndarray = field(init=False)
    c_hat: np.ndarray = field(init=False)

    def __post_init__(self):
        S, A = self.S, self.A
        self.N = np.zeros((S, A), dtype=np.int64)
        self.N3 = np.zeros((S, A, S + 1), dtype=np.int64)
        self.theta = np.zeros((S, A))
        self.n = np.zeros((S, A), dtype=np.int64)
        self.p_hat = np.zeros((S, A, S + 1))
        self.c_hat = np.zeros((S, A))

    def record_step(self, s: int, a: int, cost: float, s_next: int) -> int:
        """Count one transition; returns the new visit count N(s, a)."""
        if not 0.0 <= cost <= 1.0:
            raise ValueError(f"cost {cost} outside [0, 1]")
        self.N[s, a] += 1
        self.N3[s, a, s_next] += 1
        self.theta[s, a] += cost
        return int(self.N[s, a])

    def snapshot(self, s: int, a: int) -> None:
        """Refresh the empirical cost and transitions of (s, a) and reset its accumulator.

        Between snapshots N doubles, so ``theta`` holds the newest N/2 samples
        and ``2 * theta / N`` is their mean.
        """
        N = int(self.N[s, a])
        if N == 0:
            raise ValueError(f"snapshot of unvisited pair ({s},{a})")
        self.c_hat[s, a] = 2.0 * self.theta[s, a] / N if N >= 2 else self.theta[s, a]
        self.theta[s, a] = 0.0
        self.p_hat[s, a] = self.N3[s, a] / N
        self.n[s, a] = N


def is_trigger(count: int) -> bool:
    """True when ``count`` is in {1, 2, 4, 8, ...}."""
    return count > 0 and count & (count - 1) == 0


def skew(p_hat_row: np.ndarray, n: int) -> np.ndarray:
    """Shift ``1/(n+1)`` of the mass onto the goal (last entry)."""
    p_hat_row = np.asarray(p_hat_row, dtype=np.float64)
    out = np.zeros_like(p_hat_row)
    if n > 0:
        out[:] = (n / (n + 1.0)) * p_hat_row
    out[-1] += 1.0 / (n + 1.0)
    return out


def skew_all(p_hat: np.ndarray, n: np.ndarray) -> np.ndarray:
    n = n.astype(np.float64)[..., None]
    out = (n / (n + 1.0)) * p_hat
    out[..., -1] += 1.0 / (n[..., 0] + 1.0)
    return out


def variance(p_row: np.ndarray, v: np.ndarray) -> float:
    """Variance of ``v`` under ``p_row``, clamped at zero."""
    m = float(p_row @ v)
    return max(float(p_row @ (v * v)) - m * m, 0.0)


def _extend(v: np.ndarray) -> np.ndarray:
    # append the goal's value (always 0)
    return np.append(v, 0.0)


@dataclass(frozen=True, eq=False)
class SkewedModel:
    """Frozen input to one VISGO call."""

    p_tilde: np.ndarray      # (S, A, S+1)
    c_hat: np.ndarray        # (S, A)
    n_plus: np.ndarray       # (S, A)
    iota: np.ndarray         # (S, A)
    B: float
    mode: str = "standard"
    c1: float = C1
    c2: float = C2
    c3: float = C3
    c4: float = C4

    @classmethod
    def from_counters(cls, counters: Counters, B: float, delta: float,
                      mode: str = "standard") -> "SkewedModel":
        S, A = counters.S, counters.A
        p_tilde = skew_all(counters.p_hat, counters.n)
        n_plus = np.maximum(counters.n, 1).astype(np.float64)
        return cls.build(p_tilde, counters.c_hat.copy(), n_plus, B, delta, mode)

    @classmethod
    def build(cls, p_tilde, c_hat, n_plus, B: float, delta: float, mode: str = "standard"):
        p_tilde = np.asarray(p_tilde, dtype=np.float64)
        S, A, S1 = p_tilde.shape
        n_plus = np.asarray(n_plus, dtype=np.float64)
        if not 0.0 < delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        iota = np.log(12.0 * S * A * S1 * n_plus ** 2 / delta)
        c2 = C2
        if mode == "appC":
            c2 = C2 * appc_multiplier(p_tilde)
        elif mode != "standard":
            raise ValueError(f"unknown bonus mode {mode!r}")
        return cls(p_tilde, np.asarray(c_hat, dtype=np.float64), n_plus, iota, float(B), mode, c2=c2)

    @property
    def S(self) -> int:
        return self.p_tilde.shape[0]

    @property
    def A(self) -> int:
        return self.p_tilde.shape[1]

    @property
    def nu(self) -> float:
        return float(self.p_tilde[:, :, -1].min())

    def iteration_bound(self, eps_vi: float, scale: float | None = None) -> int:
        """Sweep budget guaranteed by the (1 - nu^2)-contraction."""
        scale = max(self.B, 1.0) if scale is None else scale
        return math.ceil(math.log(max(scale, eps_vi) / eps_vi) / self.nu ** 2) + 2

    def to_dict(self) -> dict:
        return {
            "p_tilde": self.p_tilde.tolist(),
            "c_hat": self.c_hat.tolist(),
            "n_plus": self.n_plus.tolist(),
            "iota": self.iota.tolist(),
            "B": self.B,
            "mode": self.mode,
            "constants": [self.c1, self.c2, self.c3, self.c4],
        }


def appc_multiplier(p_tilde: np.ndarray) -> float:
    """ln(e / (1 - max non-goal entry of the skewed rows))."""
    worst = float(p_tilde[:, :, :-1].max()) if p_tilde.shape[2] > 1 else 0.0
    return math.log(math.e / (1.0 - worst))


def bonus(model: SkewedModel, v: np.ndarray, s: int, a: int) -> float:
    """Exploration bonus of (s, a) for the value vector ``v`` (length S, goal implicit)."""
    ve = _extend(np.asarray(v, dtype=np.float64))
    n, io, B = model.n_plus[s, a], model.iota[s, a], model.B
    var = variance(model.p_tilde[s, a], ve)
    S1 = model.p_tilde.shape[2]
    return (max(model.c1 * math.sqrt(var * io / n), model.c2 * B * io / n)
            + model.c3 * math.sqrt(model.c_hat[s, a] * io / n)
            + model.c4 * B * math.sqrt(S1 * io) / n)


def bonuses(model: SkewedModel, v: np.ndarray) -> np.ndarray:
    """Vectorised :func:`bonus` over every (s, a)."""
    ve = _extend(v)
    P = model.p_tilde
    mean = P @ ve
    var = np.maximum(P @ (ve * ve) - mean * mean, 0.0)
    n, io, B = model.n_plus, model.iota, model.B
    S1 = P.shape[2]
    return (np.maximum(model.c1 * np.sqrt(var * io / n), model.c2 * B * io / n)
            + model.c3 * np.sqrt(model.c_hat * io / n)
            + model.c4 * B * np.sqrt(S1 * io) / n)


def apply_operator(model: SkewedModel, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One synchronous sweep; returns ``(v_next, q_next)``."""
    v = np.asarray(v, dtype=np.float64)
    ve = _extend(v)
    P = model.p_tilde
    mean = P @ ve
    var = np.maximum(P @ (ve * ve) - mean * mean, 0.0)
    n, io, B = model.n_plus, model.iota, model.B
    b = (np.maximum(model.c1 * np.sqrt(var * io / n), model.c2 * B * io / n)
         + model.c3 * np.sqrt(model.c_hat * io / n)
         + model.c4 * B * np.sqrt(P.shape[2] * io) / n)
    q = np.maximum(model.c_hat + mean - b, 0.0)
    return q.min(axis=1), q


@dataclass
class VisgoOutcome:
    status: str          # "converged" or "range_exceeded"
    q: np.ndarray
    v: np.ndarray
    iterations: int
    eps_vi: float
    history: list | None = None

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def to_dict(self) -> dict:
        return {"status": self.status, "q": self.q.tolist(), "v": self.v.tolist(),
                "iterations": self.iterations, "eps_vi": self.eps_vi}


def solve(model: SkewedModel, eps_vi: float, range_limit: float | None = None,
          keep_history: bool = False, eps_floor: float = EPS_FLOOR) -> VisgoOutcome:
    """Iterate the operator from zero until consecutive iterates are ``eps_vi`` apart.

    With ``range_limit`` set, stops early (status ``range_exceeded``) as soon
    as a sweep produces ``max V > range_limit``. The precision is floored at
    ``eps_floor`` because later triggers ask for 2^-j far below float64
    resolution.
    """
    if eps_vi <= 0:
        raise ValueError("eps_vi must be positive")
    eps = max(eps_vi, eps_floor)
    v = np.zeros(model.S)
    q = np.zeros((model.S, model.A))
    history = [v] if keep_history else None
    bound = None
    i = 0
    while True:
        v_new, q = apply_operator(model, v)
        i += 1
        if keep_history:
            history.append(v_new)
        if bound is None:
            # V^(1) - V^(0) = V^(1); its size can exceed max(B, 1) since c_hat <= 2
            bound = model.iteration_bound(eps, max(model.B, 1.0, float(v_new.max())))
        if range_limit is not None and v_new.max() > range_limit:
            return VisgoOutcome("range_exceeded", q, v_new, i, eps, history)
        if np.abs(v_new - v).max() <= eps:
            return VisgoOutcome("converged", q, v_new, i, eps, history)
        v = v_new
        if i > bound:
            raise ContractionViolation(
                f"VISGO exceeded {bound} sweeps (nu={model.nu:.3g}, eps={eps:.3g})")
