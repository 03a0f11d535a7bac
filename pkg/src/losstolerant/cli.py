"""Command-line entry point: ``losstolerant {sweep,solve,simulate,oracle}``."""
from __future__ import annotations

import argparse
import csv
import dataclasses
import sys
from pathlib import Path

from .channel import ChannelModel, dbw_to_watts, watts_to_dbw
from .closedform import LossConstraints, solve_n1
from .errors import InfeasibleError, ParameterError
from .experiment import (
    ExperimentConfig,
    load_config,
    read_policy_file,
    report,
    run_experiment,
    write_policy_file,
)
from .optimizer import check_feasibility, grid_search_oracle, sa_optimize
from .simulator import validate_against_chain


def _add_common(p, config_required=False):
    p.add_argument("--config", type=Path, required=config_required, help="TOML experiment file")
    p.add_argument("--seed", type=int, help="base seed (unsigned 64-bit)")
    p.add_argument("--out", type=Path, help="output file")
    p.add_argument("--strict", action="store_true", help="exit nonzero on any infeasible result")


def _add_point(p):
    g = p.add_argument_group("single-point overrides")
    g.add_argument("--gamma", type=float)
    g.add_argument("--n-max", type=int)
    g.add_argument("--eps-out", type=float)
    g.add_argument("--peak-dbw", type=float)
    g.add_argument("--rate", type=float)
    g.add_argument("--noise", type=float)
    g.add_argument("--branches", type=int, help="diversity branches (omit for Rayleigh)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="losstolerant", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run a parameter sweep from a config file")
    _add_common(p, config_required=True)
    p.add_argument("--plots", help="prefix for per-method two-column .dat files")

    p = sub.add_parser("solve", help="optimize a single operating point")
    _add_common(p)
    _add_point(p)
    p.add_argument("--method", choices=("auto", "closed_form", "sa", "oracle"), default="auto")

    p = sub.add_parser("simulate", help="Monte Carlo run of a policy file")
    _add_common(p)
    _add_point(p)
    p.add_argument("--policy", type=Path, required=True, help="one outage probability per line")
    p.add_argument("--slots", type=int, default=1_000_000)

    p = sub.add_parser("oracle", help="exhaustive grid search (N <= 3)")
    _add_common(p)
    _add_point(p)
    p.add_argument("--resolution", type=float)
    return parser


def _point_config(args) -> ExperimentConfig:
    if args.config is not None:
        config = load_config(args.config)
    else:
        config = ExperimentConfig(
            model=ChannelModel(),
            constraints=LossConstraints(gamma=0.2, n_max=1, eps_out=0.1),
        )
    model = config.model
    model = ChannelModel(
        rate=args.rate if args.rate is not None else model.rate,
        noise=args.noise if args.noise is not None else model.noise,
        branches=args.branches if args.branches is not None else model.branches,
    )
    changes = {}
    for name in ("gamma", "n_max", "eps_out"):
        if getattr(args, name) is not None:
            changes[name] = getattr(args, name)
    if args.peak_dbw is not None:
        changes["p_peak"] = dbw_to_watts(args.peak_dbw)
    config = dataclasses.replace(config, model=model, constraints=config.constraints.replace(**changes))
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed, sa=dataclasses.replace(config.sa, seed=args.seed))
    return config


def _print_analysis(analysis, constraints, model):
    verdict = check_feasibility(analysis, constraints, model)
    print("eps     :", " ".join(f"{e:.6f}" for e in analysis.eps))
    print("powers W:", " ".join(f"{p:.6f}" for p in analysis.powers))
    print("pi      :", " ".join(f"{p:.6f}" for p in analysis.pi))
    print(f"gamma_r : {analysis.gamma_r:.6f}  (limit {constraints.gamma})")
    print(f"P_a     : {analysis.p_avg:.6f} W  ({watts_to_dbw(analysis.p_avg):.4f} dBW)")
    status = "feasible" if verdict.feasible else "infeasible: " + ",".join(verdict.violated)
    print("status  :", status)
    return verdict.feasible


def cmd_sweep(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    result = run_experiment(config, out=args.out, strict=args.strict or None)
    print(report(result.rows, plot_prefix=args.plots))
    if result.csv_path is not None:
        print(f"wrote {result.csv_path}")
    return result.exit_status


def cmd_solve(args) -> int:
    config = _point_config(args)
    c = config.constraints
    method = args.method
    if method == "auto":
        method = "closed_form" if c.n_max == 1 else "sa"
    if method == "closed_form":
        analysis = solve_n1(c, config.model)
        if not analysis.power_monotone:
            print("note    : closed-form boundary solution has P_0 > P_1")
    elif method == "sa":
        analysis = sa_optimize(c, config.model, config.sa).best_analysis
    else:
        analysis = grid_search_oracle(c, config.model, config.oracle_resolution).best_analysis
    feasible = _print_analysis(analysis, c, config.model)
    if args.out is not None:
        write_policy_file(args.out, analysis.eps)
        print(f"wrote {args.out}")
    return 1 if (args.strict and not feasible) else 0


def cmd_oracle(args) -> int:
    config = _point_config(args)
    resolution = args.resolution if args.resolution is not None else config.oracle_resolution
    res = grid_search_oracle(config.constraints, config.model, resolution)
    feasible = _print_analysis(res.best_analysis, config.constraints, config.model)
    if args.out is not None:
        write_policy_file(args.out, res.best_analysis.eps)
        print(f"wrote {args.out}")
    return 1 if (args.strict and not feasible) else 0


def cmd_simulate(args) -> int:
    config = _point_config(args)
    eps = read_policy_file(args.policy)
    seed = config.seed if args.seed is None else args.seed
    strict = args.slots >= 22_500
    rep = validate_against_chain(eps, config.model, args.slots, seed, strict=strict)
    print(rep.summary())
    record = rep.stats.to_record()
    if args.out is not None:
        with args.out.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(record.keys())
            writer.writerow(repr(v) if isinstance(v, float) else v for v in record.values())
        print(f"wrote {args.out}")
    if args.strict:
        n = eps.size - 1
        if n == config.constraints.n_max:
            feasible = check_feasibility(eps, config.constraints, config.model).feasible
            return 0 if feasible and rep.passed else 1
        return 0 if rep.passed else 1
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"sweep": cmd_sweep, "solve": cmd_solve, "simulate": cmd_simulate, "oracle": cmd_oracle}
    try:
        return handler[args.command](args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 1
    except (ParameterError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
