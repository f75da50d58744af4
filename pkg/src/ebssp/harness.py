"""Seeded batch experiments: oracle solve, learner runs, regret tables and summaries."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import mdp as mdp_mod
from .learner import DEFAULT_T_MAX, LearnerConfig, eta_for_config, run as run_known_b
from .oracle import OptimalSolution, empirical_regret, optimal_values
from .parameter_free import run_parameter_free

log = logging.getLogger(__name__)

REGRET_COLUMNS = ("seed", "episode", "cum_cost", "cum_regret", "steps", "B_tilde")
ALGORITHMS = ("ebssp", "parameter_free")
GENERATORS = {
    "loop_chain": mdp_mod.make_loop_chain,
    "random_ssp": mdp_mod.make_random_ssp,
    "one_step": mdp_mod.make_one_step,
}


class SpecError(ValueError):
    pass


def fmt(x) -> str:
    """Fixed 12-significant-digit decimal used in every CSV cell."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


@dataclass
class ExperimentSpec:
    env: dict
    algorithm: str = "ebssp"
    K: int = 1000
    B: float | str = "oracle"
    eta: float | dict = 0.0
    delta: float = 0.1
    bonus_mode: str = "standard"
    T_max: int = DEFAULT_T_MAX
    x: float = 6.0
    seeds: list = field(default_factory=lambda: [0])
    out_dir: str = "out"
    oracle_tol: float = 1e-10
    eta_oracle: float = 1e-9

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise SpecError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if not self.seeds:
            raise SpecError("seeds must be non-empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise SpecError("seeds must be distinct")
        if int(self.K) < 1:
            raise SpecError("K must be >= 1")
        if not 0.0 < self.delta < 1.0:
            raise SpecError("delta must lie in (0, 1)")
        if not isinstance(self.env, dict) or not ("path" in self.env or "generator" in self.env):
            raise SpecError("env needs either 'path' or 'generator'")
        if "generator" in self.env and self.env["generator"] not in GENERATORS:
            raise SpecError(f"unknown generator {self.env['generator']!r}")
        if isinstance(self.B, str) and self.B != "oracle":
            raise SpecError("B must be a number or 'oracle'")
        self.K = int(self.K)
        self.T_max = int(self.T_max)

    @classmethod
    def from_dict(cls, d: dict, base_dir: Path | None = None) -> "ExperimentSpec":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise SpecError(f"unknown spec fields: {sorted(extra)}")
        d = dict(d)
        env = dict(d.get("env") or {})
        if "path" in env and base_dir is not None and not Path(env["path"]).is_absolute():
            env["path"] = str(base_dir / env["path"])
        d["env"] = env
        try:
            return cls(**d)
        except TypeError as e:
            raise SpecError(str(e)) from e

    @classmethod
    def load(cls, path) -> "ExperimentSpec":
        path = Path(path)
        try:
            d = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise SpecError(f"cannot read spec {path}: {e}") from e
        return cls.from_dict(d, path.parent)

    def env_key(self) -> str:
        return json.dumps(self.env, sort_keys=True)


def build_env(env: dict) -> mdp_mod.SspMdp:
    try:
        if "path" in env:
            return mdp_mod.SspMdp.load(env["path"])
        return GENERATORS[env["generator"]](**env.get("params", {}))
    except (OSError, KeyError, TypeError, ValueError) as e:
        raise SpecError(f"cannot build env {env}: {e}") from e


@lru_cache(maxsize=32)
def _cached_oracle(env_key: str, tol: float, eta_oracle: float):
    env = build_env(json.loads(env_key))
    return env, optimal_values(env, tol, eta_oracle)


def resolve_env(spec: ExperimentSpec) -> tuple[mdp_mod.SspMdp, OptimalSolution]:
    env, sol = _cached_oracle(spec.env_key(), spec.oracle_tol, spec.eta_oracle)
    problems = [p for p in mdp_mod.validate_mdp(env)]
    if problems:
        raise SpecError("invalid MDP: " + "; ".join(problems))
    return env, sol


def resolve_eta(spec: ExperimentSpec, sol: OptimalSolution) -> float:
    if isinstance(spec.eta, (int, float)):
        return float(spec.eta)
    cfg = dict(spec.eta)
    kind = cfg.pop("kind", None)
    T_bar = cfg.get("T_bar")
    if T_bar == "oracle":
        T_bar = sol.t_star
    try:
        return eta_for_config(kind, spec.K, cfg.get("n_exponent"), T_bar)
    except ValueError as e:
        raise SpecError(str(e)) from e


def resolve_B(spec: ExperimentSpec, sol: OptimalSolution) -> float:
    if spec.B == "oracle":
        return max(sol.b_star, 1.0)
    return float(spec.B)


@dataclass
class SeedResult:
    seed: int
    status: str
    episode_costs: list
    episode_steps: list
    episode_b_tilde: list
    phases: list | None = None
    error: str | None = None


def run_seed(spec: ExperimentSpec, seed: int) -> SeedResult:
    """One learner run; exceptions become a failed result instead of propagating."""
    try:
        env, sol = resolve_env(spec)
        eta = resolve_eta(spec, sol)
        if spec.algorithm == "ebssp":
            cfg = LearnerConfig(B=resolve_B(spec, sol), eta=eta, delta=spec.delta,
                                bonus_mode=spec.bonus_mode, T_max=spec.T_max, K=spec.K)
            rl = run_known_b(cfg, env, seed)
        else:
            rl = run_parameter_free(env, spec.K, spec.delta, spec.x, seed, eta,
                                    spec.bonus_mode, spec.T_max)
    except Exception as e:  # noqa: BLE001 - batch keeps going
        log.exception("seed %s failed", seed)
        return SeedResult(seed, "error", [], [], [], error=f"{type(e).__name__}: {e}")
    return SeedResult(seed, rl.status, rl.episode_costs, rl.episode_steps, rl.episode_b_tilde,
                      rl.phases)


def _threads(n: int) -> int:
    cap = os.environ.get("SSP_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(limit, n))


def run_seeds(spec: ExperimentSpec) -> list[SeedResult]:
    workers = _threads(len(spec.seeds))
    if workers == 1:
        return [run_seed(spec, s) for s in spec.seeds]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_seed, [spec] * len(spec.seeds), spec.seeds))


def regret_rows(res: SeedResult, v_star_s0: float) -> list[tuple]:
    regret = empirical_regret(res.episode_costs, v_star_s0)
    cum_cost = np.cumsum(res.episode_costs)
    return [(res.seed, k + 1, cum_cost[k], regret[k], res.episode_steps[k], res.episode_b_tilde[k])
            for k in range(len(res.episode_costs))]


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def run_experiment(spec: ExperimentSpec, out_dir: str | Path | None = None) -> dict:
    """Run every seed and write regret.csv, summary.json and plotdata.csv.

    Returns the summary dictionary; ``summary["failures"]`` lists seeds that
    errored or hit the step cap.
    """
    out = Path(out_dir if out_dir is not None else spec.out_dir)
    env, sol = resolve_env(spec)
    v0 = float(sol.v_star[env.s0])
    results = run_seeds(spec)

    rows, finals, phase_counts, failures = [], [], [], []
    complete = []
    for res in results:
        if res.status != "completed":
            failures.append({"seed": res.seed, "status": res.status, "error": res.error})
        if res.episode_costs:
            rows.extend(regret_rows(res, v0))
        if res.status == "completed":
            complete.append(res)
            finals.append(float(empirical_regret(res.episode_costs, v0)[-1]))
            if res.phases is not None:
                phase_counts.append(len(res.phases))

    summary = {
        "algorithm": spec.algorithm,
        "K": spec.K,
        "seeds": list(spec.seeds),
        "V_star_s0": v0,
        "B_star": sol.b_star,
        "T_star": sol.t_star,
        "B_used": resolve_B(spec, sol) if spec.algorithm == "ebssp" else None,
        "eta": resolve_eta(spec, sol),
        "completed_seeds": [r.seed for r in complete],
        "final_regret": finals,
        "mean_R_K": float(np.mean(finals)) if finals else None,
        "std_R_K": float(np.std(finals, ddof=1)) if len(finals) > 1 else 0.0 if finals else None,
        "mean_R_K_over_sqrt_K": float(np.mean(finals)) / math.sqrt(spec.K) if finals else None,
        "std_R_K_over_sqrt_K": (float(np.std(finals, ddof=1)) / math.sqrt(spec.K)
                                if len(finals) > 1 else 0.0 if finals else None),
        "failures": failures,
    }
    if spec.algorithm == "parameter_free":
        summary["phase_counts"] = phase_counts
        summary["phases"] = {str(r.seed): r.phases for r in complete}

    plot_rows = []
    if complete:
        R = np.array([empirical_regret(r.episode_costs, v0) for r in complete])
        mean = R.mean(axis=0)
        std = R.std(axis=0, ddof=1) if len(complete) > 1 else np.zeros_like(mean)
        plot_rows = [(k + 1, mean[k], std[k]) for k in range(R.shape[1])]

    out.mkdir(parents=True, exist_ok=True)
    (out / "regret.csv").write_text(_csv_text(REGRET_COLUMNS, rows))
    (out / "plotdata.csv").write_text(_csv_text(("episode", "mean_regret", "std_regret"), plot_rows))
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def loglog_slope(K_grid, mean_R) -> float:
    """Least-squares slope of log R_K against log K."""
    K = np.asarray(K_grid, dtype=np.float64)
    R = np.asarray(mean_R, dtype=np.float64)
    if len(K) < 2 or (R <= 0).any():
        return float("nan")
    return float(np.polyfit(np.log(K), np.log(R), 1)[0])


def sweep(spec: ExperimentSpec, K_grid, out_dir: str | Path | None = None) -> dict:
    """Repeat the experiment for each K; report mean R_K and the fitted log-log slope."""
    K_grid = [int(k) for k in K_grid]
    if not K_grid or K_grid != sorted(K_grid):
        raise SpecError("K grid must be non-empty and ascending")
    out = Path(out_dir if out_dir is not None else spec.out_dir)
    table = []
    failures = []
    for K in K_grid:
        summary = run_experiment(replace(spec, K=K), out / f"K_{K}")
        finals = summary["final_regret"]
        se = summary["std_R_K"] / math.sqrt(len(finals)) if finals else None
        table.append({"K": K, "mean_R_K": summary["mean_R_K"], "std_R_K": summary["std_R_K"],
                      "se_R_K": se, "n": len(finals)})
        failures.extend({"K": K, **f} for f in summary["failures"])
    means = [row["mean_R_K"] for row in table]
    slope = loglog_slope(K_grid, means) if None not in means else float("nan")
    # NaN is not valid JSON; an undefined slope is reported as null
    result = {"table": table, "slope": None if math.isnan(slope) else slope, "failures": failures}
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(_csv_text(
        ("K", "mean_R_K", "std_R_K", "se_R_K", "n"),
        [(r["K"], r["mean_R_K"], r["std_R_K"], r["se_R_K"], r["n"]) for r in table
         if r["mean_R_K"] is not None]))
    (out / "sweep.json").write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    return result
