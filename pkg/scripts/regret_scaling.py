"""Known-B EB-SSP regret on a random SSP over a grid of K, with the fitted log-log slope.

    python scripts/regret_scaling.py --k-grid 1000,4000,16000 --seeds 10
"""
import argparse
import json
from pathlib import Path

from ebssp import harness

HERE = Path(__file__).parent


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--spec", default=str(HERE / "specs" / "random_ssp.json"))
    p.add_argument("--k-grid", default="1000,4000")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--out", default="out/regret_scaling")
    args = p.parse_args()

    spec = harness.ExperimentSpec.load(args.spec)
    spec.seeds = list(range(args.seeds))
    grid = [int(k) for k in args.k_grid.split(",")]
    result = harness.sweep(spec, grid, args.out)
    for row in result["table"]:
        print(f"K={row['K']:>7}  mean R_K={row['mean_R_K']:10.2f}  R_K/K={row['mean_R_K'] / row['K']:.4f}"
              f"  se={row['se_R_K']:.2f}")
    print("log-log slope:", json.dumps(result["slope"]))


if __name__ == "__main__":
    main()
