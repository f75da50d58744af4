"""Command line: ``ssp validate | oracle | run | sweep``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import harness
from .mdp import SspMdp, validate_mdp
from .oracle import OracleError, optimal_values

EXIT_OK, EXIT_SPEC, EXIT_SEED = 0, 2, 3


def _load_mdp(path):
    try:
        return SspMdp.load(path)
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise harness.SpecError(f"cannot read MDP {path}: {e}") from e


def cmd_validate(args) -> int:
    problems = validate_mdp(_load_mdp(args.mdp))
    print(json.dumps({"valid": not problems, "problems": problems}, indent=2))
    return EXIT_OK if not problems else EXIT_SPEC


def cmd_oracle(args) -> int:
    mdp = _load_mdp(args.mdp)
    try:
        sol = optimal_values(mdp, args.tol, args.eta_oracle)
    except OracleError as e:
        print(f"oracle failed: {e}", file=sys.stderr)
        return EXIT_SPEC
    d = sol.to_dict()
    d.pop("Q_star")
    print(json.dumps(d, indent=2))
    return EXIT_OK


def _spec(args) -> harness.ExperimentSpec:
    spec = harness.ExperimentSpec.load(args.spec)
    if args.out is not None:
        spec.out_dir = args.out
    return spec


def cmd_run(args) -> int:
    spec = _spec(args)
    summary = harness.run_experiment(spec)
    print(json.dumps({k: summary[k] for k in ("K", "mean_R_K", "std_R_K", "failures")}, indent=2))
    return EXIT_SEED if summary["failures"] else EXIT_OK


def cmd_sweep(args) -> int:
    spec = _spec(args)
    try:
        grid = [int(k) for k in args.k_grid.split(",") if k.strip()]
    except ValueError as e:
        raise harness.SpecError(f"bad --k-grid: {e}") from e
    result = harness.sweep(spec, grid)
    print(json.dumps(result, indent=2))
    return EXIT_SEED if result["failures"] else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ssp", description="EB-SSP experiments on tabular SSP-MDPs")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check an MDP JSON file")
    v.add_argument("mdp")
    v.set_defaults(func=cmd_validate)

    o = sub.add_parser("oracle", help="print V*, B*, T*, pi* of an MDP JSON file")
    o.add_argument("mdp")
    o.add_argument("--tol", type=float, default=1e-10)
    o.add_argument("--eta-oracle", type=float, default=1e-9)
    o.set_defaults(func=cmd_oracle)

    r = sub.add_parser("run", help="run a seeded experiment")
    r.add_argument("spec")
    r.add_argument("--out", default=None)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run an experiment over a grid of K")
    s.add_argument("spec")
    s.add_argument("--k-grid", required=True)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except harness.SpecError as e:
        print(f"spec error: {e}", file=sys.stderr)
        return EXIT_SPEC


if __name__ == "__main__":
    sys.exit(main())
