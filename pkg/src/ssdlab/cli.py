"""Command-line entry point.

Subcommands: train, evaluate, schelling, theory, buttons, replay. Exit codes
follow convention: 0 success, 1 runtime error (message on stderr), 2 usage.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import SsdlabError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ssdlab",
        description="Desk-scale laboratory for intertemporal social dilemmas")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="run a training experiment from a config file")
    train.add_argument("--config", required=True, help="experiment config file")
    train.add_argument("--seed", type=int, help="override the config seed")
    train.add_argument("--out", help="override the output directory")

    ev = sub.add_parser("evaluate", help="roll out saved checkpoints without learning")
    ev.add_argument("--config", required=True, help="experiment config file")
    ev.add_argument("--checkpoints", required=True,
                    help="directory holding agent_<i>.npz checkpoints")
    ev.add_argument("--episodes", type=int, default=10)
    ev.add_argument("--seed", type=int, help="override the config seed")
    ev.add_argument("--out", help="directory for metrics.csv (default: print summary)")

    sch = sub.add_parser("schelling", help="measure a Schelling diagram and classify it")
    sch.add_argument("--env", required=True, choices=("cleanup", "harvest"))
    sch.add_argument("--scripted", action="store_true", required=True,
                     help="use enforced scripted cooperator/defector policies")
    sch.add_argument("--episodes-per-point", type=int, default=20)
    sch.add_argument("--seed", type=int, default=0)
    sch.add_argument("--out", help="directory for the diagram CSV")

    th = sub.add_parser("theory", help="short-term payoff transforms and crossings")
    th.add_argument("--c", type=float, required=True, help="all-cooperate payoff")
    th.add_argument("--d", type=float, required=True, help="all-defect payoff")
    th.add_argument("--N", type=int, required=True, help="population size")
    group = th.add_mutually_exclusive_group(required=True)
    group.add_argument("--alpha", type=float,
                       help="guilt transform weight (crossing at N/alpha)")
    group.add_argument("--beta", type=float, nargs=2, metavar=("BETA_C", "BETA_D"),
                       help="envy transform weights for cooperators and defectors")
    th.add_argument("--out", help="directory for the line CSV")

    bt = sub.add_parser("buttons", help="button-game press analysis per condition")
    bt.add_argument("--env", required=True, choices=("dictate", "give", "take"))
    bt.add_argument("--horizon", type=int, default=12,
                    help="brute-force search horizon")
    bt.add_argument("--out", help="directory for the statistics CSV")

    rp = sub.add_parser("replay", help="verify a recorded episode against re-simulation")
    rp.add_argument("--log", required=True, help="replay log file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except SsdlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.command == "train":
        return _cmd_train(args)
    if args.command == "evaluate":
        return _cmd_evaluate(args)
    if args.command == "schelling":
        return _cmd_schelling(args)
    if args.command == "theory":
        return _cmd_theory(args)
    if args.command == "buttons":
        return _cmd_buttons(args)
    return _cmd_replay(args)


def _load_config(args):
    from .config import load_config
    config = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    return config


def _cmd_train(args) -> int:
    from .harness import run_experiment
    config = _load_config(args)
    result = run_experiment(config, out_dir=args.out)
    episodes = sum(1 for r in result.training_log if r.get("type") == "episode")
    print(f"trained {episodes} episodes -> {result.out_dir} "
          f"(config {result.config_hash[:12]})")
    return 0


def _cmd_evaluate(args) -> int:
    from .errors import ConfigError
    from .harness import build_env, write_metrics_csv
    from .learner import evaluate, load_params

    config = _load_config(args)
    env = build_env(config)
    nets = []
    for i in range(env.n_agents):
        path = os.path.join(args.checkpoints, f"agent_{i}.npz")
        if not os.path.exists(path):
            raise ConfigError(f"missing checkpoint {path}")
        nets.append(load_params(path))
    log = evaluate(env, nets, config.agent_params(env.n_agents),
                   episodes=args.episodes, seed=config.seed)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "metrics.csv")
        write_metrics_csv(log, path)
        print(f"wrote {path}")
    else:
        for record in log:
            if record.get("type") == "episode":
                print(json.dumps(record, sort_keys=True))
    return 0


def _cmd_schelling(args) -> int:
    from .harness import scripted_schelling, write_schelling_csv
    diagram, verdict = scripted_schelling(args.env,
                                          episodes_per_point=args.episodes_per_point,
                                          seed=args.seed)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, f"schelling_{args.env}.csv")
        write_schelling_csv(diagram, path)
        print(f"wrote {path}")
    print(f"{args.env}: social dilemma = {verdict.is_ssd} "
          f"(fear={verdict.fear}, greed={verdict.greed}, "
          f"inconclusive={verdict.inconclusive})")
    return 0


def _cmd_theory(args) -> int:
    from .gametheory import ShortTermPayoffs, envy_transform, guilt_transform
    from .harness import write_theory_csv
    payoffs = ShortTermPayoffs(cooperator_payoff=args.c, defector_payoff=args.d,
                               n_players=args.N)
    if args.alpha is not None:
        transformed = guilt_transform(payoffs, args.alpha)
    else:
        transformed = envy_transform(payoffs, args.beta[0], args.beta[1])
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "theory_lines.csv")
        write_theory_csv(payoffs, transformed, path)
        print(f"wrote {path}")
    if transformed.crossing is None:
        print("lines are parallel: defection dominates at every cooperator count")
    else:
        print(f"crossing at x = {transformed.crossing:g} "
              f"(interior: {transformed.crossing_interior})")
    return 0


def _cmd_buttons(args) -> int:
    from .harness import run_button_suite, write_button_csv
    result = run_button_suite(args.env, horizon=args.horizon)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, f"buttons_{args.env}.csv")
        write_button_csv(result, path)
        print(f"wrote {path}")
    print(f"{args.env}: selfish optimum {result['optimal_return']:g}, "
          f"press-free optimum {result['press_free_return']:g}, "
          f"pressing ever helps: {result['pressing_ever_helps']}")
    for condition, preferred in result["press_preferred"].items():
        print(f"  {condition}: press preferred = {preferred}")
    return 0


def _cmd_replay(args) -> int:
    from .replay import verify_file
    report = verify_file(args.log)
    print(report.detail)
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
