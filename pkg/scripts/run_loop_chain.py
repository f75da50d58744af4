"""Loop-chain experiment: oracle summary plus known-B regret for several cost perturbations.

The chain has a single action, so every episode costs exactly 1 and the
regret is zero up to the oracle's own perturbation bias. The script shows that
plainly and checks that the learner's optimistic Q never exceeds Q*.
"""
import argparse

import numpy as np

from ebssp.learner import LearnerConfig, eta_for_config, run
from ebssp.mdp import make_loop_chain
from ebssp.oracle import empirical_regret, optimal_values


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--S", type=int, default=5)
    p.add_argument("--p-min", type=float, default=0.2)
    p.add_argument("--K", type=int, default=2000)
    p.add_argument("--seeds", type=int, default=10)
    args = p.parse_args()

    mdp = make_loop_chain(args.S, args.p_min)
    sol = optimal_values(mdp)
    print(f"V*(s0)={sol.v_star[0]:.9f}  B*={sol.b_star:.9f}  T*={sol.t_star:.3f}")

    etas = {"0": 0.0,
            "K^-2": eta_for_config("general_unknown_T", args.K, n_exponent=2),
            "(T*K)^-1": eta_for_config("general_orderT", args.K, T_bar=sol.t_star)}
    for name, eta in etas.items():
        finals, worst = [], -np.inf
        for seed in range(args.seeds):
            gap = []
            log = run(LearnerConfig(B=max(sol.b_star, 1.0), eta=eta, K=args.K), mdp, seed,
                      hook=lambda st, m, out: gap.append((out.q - sol.q_star).max()))
            finals.append(empirical_regret(log.episode_costs, sol.v_star[0])[-1])
            worst = max(worst, max(gap))
        print(f"eta={name:>9}: mean R_K={np.mean(finals): .3e}  max(Q - Q*)={worst: .3e}")


if __name__ == "__main__":
    main()
