"""``horizon-irl`` command line.

Exit codes: 0 success, 1 invalid input or configuration, 2 learner
infeasibility in a single-job command.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .demos import sample_pairs, sample_trajectories, save_demonstrations
from .envs import GAMMA0, TASKS, load_environment, make_task, save_environment
from .lp_irl import InfeasibleError, lp_irl, save_reward_csv
from .maxent import save_theta_csv, train_maxent
from .mdp import ValidationError, finite_horizon_policy, optimal_policy
from .plots import emit_plots
from .seeding import derive_seed
from .selection import CandidateGrid, LearnerConfig, cross_validate, oracle_select, state_error_count

log = logging.getLogger("horizon_irl")

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # argparse would exit with 2, which is reserved for infeasibility
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _common(p, task=True, learner=False):
    p.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    p.add_argument("--out-dir", default="out", help="output directory (default ./out)")
    if task:
        p.add_argument("--task", choices=TASKS, default="gridworld-simple")
    if learner:
        p.add_argument("--learner", choices=("lp", "maxent"), default="lp")
    p.add_argument("--gamma0", type=float, default=None, help=f"ground-truth discount (default {GAMMA0})")
    p.add_argument("--horizon0", type=int, default=None, help="largest candidate horizon (default 20)")
    p.add_argument("--grid-size", type=int, default=None, metavar="M", help="number of candidates (default 20)")


def _data_args(p):
    p.add_argument("--env", help="environment file from gen-env (otherwise built from --task/--seed)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--percent", type=float, default=30.0, help="expert pairs as a percentage of |S|")
    g.add_argument("--n-pairs", type=int, help="expert pairs (overrides --percent)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="horizon-irl", description="Effective-horizon inverse reinforcement learning.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-env", help="generate and save an environment")
    _common(p)

    p = sub.add_parser("run-lp", help="LP-IRL at one effective discount")
    _common(p)
    _data_args(p)
    p.add_argument("--gamma-hat", type=float, required=True)
    p.add_argument("--r-max", type=float, default=1.0)
    p.add_argument("--margin", type=float, default=None)

    p = sub.add_parser("run-maxent", help="MaxEnt IRL at one effective horizon")
    _common(p)
    _data_args(p)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--restarts", type=int, default=5)

    p = sub.add_parser("cross-validate", help="select the effective horizon for one environment")
    _common(p, learner=True)
    _data_args(p)
    p.add_argument("--oracle", action="store_true", help="also run the oracle selection")
    p.add_argument("--include-reference", action="store_true", help="add gamma0 / horizon0 to the grid")

    p = sub.add_parser("sweep", help="run a seeded sweep from a config file")
    _common(p, learner=True)
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--n-environments", type=int, default=None)
    p.add_argument("--percentages", default=None, help="comma separated data percentages")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--plot", action="store_true", help="also write SVG plots")

    p = sub.add_parser("theory", help="bound evaluation and policy-class checks")
    _common(p, task=False)
    p.add_argument("--check", choices=("bound", "theorem4", "policy-class", "all"), default="all")
    p.add_argument("--n", type=int, nargs="+", default=[10, 100, 1000, 10000], help="N values for the bound")
    p.add_argument("--n-states", type=int, default=100)
    p.add_argument("--pi-class-size", type=int, default=1)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--r-max", type=float, default=1.0)
    p.add_argument("--instances", type=int, default=200)

    p = sub.add_parser("plot", help="SVG figures from a sweep summary")
    _common(p, task=False)
    p.add_argument("--summary", required=True)
    p.add_argument("--results", help="results.csv for the cross-validation scatter")
    p.add_argument("--task", choices=TASKS, default=None)
    return parser


def _out(args) -> Path:
    out = Path(args.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ValidationError(f"cannot create {out}: {exc}") from exc
    return out


def _gamma0(args):
    return GAMMA0 if args.gamma0 is None else args.gamma0


def _environment(args):
    if getattr(args, "env", None):
        return load_environment(args.env)
    return make_task(args.task, args.seed, _gamma0(args))


def _n_pairs(args, env):
    return args.n_pairs if args.n_pairs is not None else ex.n_pairs_for(args.percent, env.n_states)


def cmd_gen_env(args):
    env = make_task(args.task, args.seed, _gamma0(args))
    path = save_environment(env, _out(args) / f"{args.task}_seed{args.seed}.json")
    print(path)


def cmd_run_lp(args):
    env = _environment(args)
    out = _out(args)
    demos = sample_pairs(env.mdp, env.expert, _n_pairs(args, env), derive_seed(args.seed, 2))
    save_demonstrations(demos, out / "demonstrations.csv")
    reward = lp_irl(env.mdp, demos, args.gamma_hat, r_max=args.r_max, margin=args.margin)
    save_reward_csv(reward, out / "reward.csv")
    pi = optimal_policy(env.mdp, args.gamma_hat, reward=reward)[0]
    print(f"state_errors={state_error_count(pi, env.expert)} n_states={env.n_states}")


def cmd_run_maxent(args):
    env = _environment(args)
    out = _out(args)
    trajs = sample_trajectories(env.mdp, env.expert, _n_pairs(args, env), args.horizon, derive_seed(args.seed, 2))
    if len(trajs) == 0:
        raise ValidationError("not enough pairs for a single trajectory of this horizon")
    fit = train_maxent(env.mdp, env.features, trajs, args.horizon, epochs=args.epochs, lr=args.lr,
                       restarts=args.restarts, seed=args.seed)
    save_theta_csv(fit.weights, out / "theta.csv")
    save_reward_csv(fit.reward, out / "reward.csv")
    pi = finite_horizon_policy(env.mdp, args.horizon, fit.reward)
    print(f"state_errors={state_error_count(pi, env.expert)} n_states={env.n_states} grad_l1={fit.grad_l1:.6g}")


def cmd_cross_validate(args):
    env = _environment(args)
    out = _out(args)
    m = 20 if args.grid_size is None else args.grid_size
    if args.learner == "lp":
        grid = CandidateGrid.discounts(m, env.gamma0)
        ref = float(env.gamma0)
    else:
        grid = CandidateGrid.horizons(m, 20 if args.horizon0 is None else args.horizon0)
        ref = grid.bound
    if args.include_reference:
        grid = grid.with_value(ref)
    demos = sample_pairs(env.mdp, env.expert, _n_pairs(args, env), derive_seed(args.seed, 2))
    cfg = LearnerConfig()
    res = cross_validate(env.mdp, demos, grid, args.learner, cfg, derive_seed(args.seed, 3), env.expert,
                         env.features)
    res.to_csv(out / "cross_validation.csv")
    print(f"chosen={res.chosen}")
    if args.oracle:
        orc = oracle_select(env.mdp, demos, env.expert, grid, args.learner, cfg, derive_seed(args.seed, 3),
                            env.features)
        orc.to_csv(out / "oracle.csv")
        print(f"oracle={orc.chosen}")


def cmd_sweep(args):
    overrides = dict(task=args.task, learner=args.learner, gamma0=args.gamma0, horizon0=args.horizon0,
                     grid_size=args.grid_size, n_environments=args.n_environments, workers=args.workers,
                     out_dir=args.out_dir, base_seed=args.seed)
    if args.percentages:
        try:
            overrides["data_percentages"] = tuple(float(x) for x in args.percentages.split(","))
        except ValueError as exc:
            raise ValidationError(f"bad --percentages: {args.percentages!r}") from exc
    if args.config:
        cfg = ex.load_config(args.config, **overrides)
    else:
        cfg = ex.with_overrides(ex.ExperimentConfig(), **overrides)

    def progress(batch):
        r = batch[0]
        log.info("env %d, %g%% done (%d candidates)", r.env_index, r.data_percent, len(batch))

    records = ex.run_sweep(cfg, progress)
    out = Path(cfg.out_dir)
    print(out / "results.csv")
    if args.plot:
        for path in emit_plots(ex.read_summary(out / "summary.csv"), out / "plots", records):
            print(path)


def cmd_theory(args):
    from . import theory as th
    from .mdp import TabularMdp

    out = _out(args)
    g0 = _gamma0(args)
    if args.check in ("bound", "all"):
        m = 20 if args.grid_size is None else args.grid_size
        reports = [th.theorem1_bound(n, gh, g0, args.r_max, args.n_states, args.pi_class_size, args.delta)
                   for n in args.n for gh in CandidateGrid.discounts(m, g0).values + (g0,)]
        th.save_bound_reports(reports, out / "theorem1_bound.csv")
        print(out / "theorem1_bound.csv")
    if args.check in ("theorem4", "all"):
        g = np.random.default_rng(args.seed)
        reports = []
        for _ in range(args.instances):
            P = g.random((5, 3, 5))
            mdp = TabularMdp(P / P.sum(axis=2, keepdims=True), np.zeros((5, 3)))
            reports.append(th.theorem4_check(mdp, g.random((5, 3)), g.uniform(0.05, 0.95), g.random((5, 3)),
                                             g.uniform(0.05, 0.95), r_max=1.0))
        th.save_bound_reports(reports, out / "theorem4.csv")
        held = sum(r.holds for r in reports)
        print(f"theorem4 holds in {held}/{len(reports)}")
    if args.check in ("policy-class", "all"):
        mdp = th.claim3_instance()
        for gamma in (0.0, 0.3, 0.6, 0.99):
            s = th.enumerate_policy_class(mdp, gamma, 50, args.seed, include_construction=True)
            print(f"gamma={gamma} distinct_policies={len(s)}")
        print(f"construction_policies={len(th.claim3_policies(mdp, 0.99))}")
    return EXIT_OK


def cmd_plot(args):
    summary = ex.read_summary(args.summary)
    records = ex.read_results(args.results) if args.results else None
    paths = emit_plots(summary, _out(args), records, args.task)
    if not paths:
        print("warning: nothing to plot", file=sys.stderr)
    for p in paths:
        print(p)


COMMANDS = {"gen-env": cmd_gen_env, "run-lp": cmd_run_lp, "run-maxent": cmd_run_maxent,
            "cross-validate": cmd_cross_validate, "sweep": cmd_sweep, "theory": cmd_theory, "plot": cmd_plot}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help and usage errors
        return exc.code if isinstance(exc.code, int) else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        code = COMMANDS[args.command](args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValueError, OSError, KeyError) as exc:  # ValidationError is a ValueError
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
