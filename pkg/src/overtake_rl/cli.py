"""Command-line front end: train, eval, compare, and sweep.

Every run resolves its configuration (defaults < file < --set overrides),
prints it, and writes it to the output directory before any computation so
a crashed run still leaves its provenance.  Exit codes: 0 success, 1
configuration/validation error, 2 I/O error.
"""

import argparse
import os
import re
import sys
from dataclasses import replace

from .agents import (
    HyperParams,
    evaluate_policy,
    greedy_policy,
    load_qtable,
    save_qtable,
    train,
)
from .config import ResolvedConfig, load_config, to_ini_text
from .env import ConfigError, HighwayEnv, write_trajectory
from .harness import (
    compare_algorithms,
    compare_trend_report,
    summarize,
    sweep_epsilon,
    sweep_trend_report,
    write_json,
    write_summary_json,
)
from .records import write_records_csv


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="overtake-rl",
        description="Train and evaluate tabular RL agents on the two-lane overtaking task.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI config file")
    common.add_argument("--out", metavar="DIR", required=True, help="output directory")
    common.add_argument("--seed", type=int, default=None, help="seed override")
    common.add_argument("--set", dest="overrides", metavar="KEY=VALUE", action="append",
                        default=[], help="config override, e.g. env.n_per_lane=10 (repeatable)")
    common.add_argument("--no-figures", action="store_true", help="skip figure rendering")

    p_train = sub.add_parser("train", parents=[common], help="train a single agent")
    p_train.add_argument("--algo", choices=("q-learning", "sarsa"), default=None)
    p_train.add_argument("--episodes", type=int, default=None)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", parents=[common], help="greedy rollouts of a saved Q-table")
    p_eval.add_argument("--qtable", metavar="PATH", required=True)
    p_eval.add_argument("--algo", choices=("q-learning", "sarsa"), default=None,
                        help="require the Q-table to have been trained by this algorithm")
    p_eval.add_argument("--episodes", type=int, default=20)
    p_eval.add_argument("--trajectory", metavar="NAME", default=None,
                        help="also dump the first episode's per-step trajectory CSV")
    p_eval.set_defaults(func=cmd_eval)

    p_cmp = sub.add_parser("compare", parents=[common],
                           help="Q-learning vs Sarsa on identical seeds")
    p_cmp.add_argument("--replications", type=int, default=None)
    p_cmp.add_argument("--workers", type=int, default=1)
    p_cmp.set_defaults(func=cmd_compare)

    p_swp = sub.add_parser("sweep", parents=[common], help="epsilon-schedule sweep")
    p_swp.add_argument("--replications", type=int, default=None)
    p_swp.add_argument("--workers", type=int, default=1)
    p_swp.set_defaults(func=cmd_sweep)
    return parser


def _resolve(args) -> ResolvedConfig:
    if args.config is not None and not os.path.exists(args.config):
        raise FileNotFoundError(f"config file not found: {args.config}")
    resolved = load_config(args.config, args.overrides)
    if args.command == "train" and getattr(args, "algo", None):
        resolved = replace(resolved, experiment=replace(resolved.experiment, algo=args.algo))
    if args.command == "train" and args.episodes is not None:
        resolved = replace(resolved, params=replace(resolved.params, episodes=args.episodes))
    if getattr(args, "replications", None) is not None:
        resolved = replace(
            resolved, experiment=replace(resolved.experiment, replications=args.replications)
        )
    if args.seed is not None:
        resolved = replace(
            resolved,
            env=replace(resolved.env, seed=args.seed),
            experiment=replace(resolved.experiment, base_seed=args.seed),
        )
    resolved.validate()
    return resolved


def _write_provenance(resolved: ResolvedConfig, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    text = to_ini_text(resolved)
    print(text, end="")
    with open(os.path.join(out_dir, "resolved_config.ini"), "w", encoding="ascii") as fh:
        fh.write(text)


def _check_outputs(paths) -> None:
    missing = [str(p) for p in paths if not os.path.exists(p) or os.path.getsize(p) == 0]
    if missing:
        raise OSError(f"output files missing or empty: {missing}")


def _arm_dirname(index: int, label: str) -> str:
    safe = re.sub(r"[^\w.+-]+", "_", label).strip("_")
    return f"arm{index}_{safe}"


def cmd_train(args) -> int:
    resolved = _resolve(args)
    _write_provenance(resolved, args.out)
    algo = resolved.experiment.algo
    seed = resolved.env.seed
    qtable, records = train(lambda: HighwayEnv(resolved.env), algo, resolved.params, seed)

    qtable_path = os.path.join(args.out, "qtable.csv")
    records_path = os.path.join(args.out, "records.csv")
    save_qtable(qtable, qtable_path, resolved.env.n_d, resolved.env.n_v, algo, resolved.params)
    write_records_csv(records_path, [records])
    outputs = [qtable_path, records_path, os.path.join(args.out, "resolved_config.ini")]
    if not args.no_figures:
        from . import figures

        outputs += figures.save_training_figures(records, args.out, label=algo)
    _check_outputs(outputs)
    collisions = sum(r.collision for r in records)
    print(f"trained {algo} for {len(records)} episodes "
          f"({collisions} collisions, seed {seed}); outputs in {args.out}")
    return 0


def cmd_eval(args) -> int:
    resolved = _resolve(args)
    qtable, header = load_qtable(args.qtable)
    if (header["n_d"], header["n_v"]) != (resolved.env.n_d, resolved.env.n_v):
        raise ConfigError(
            f"qtable header indexes (n_d={header['n_d']}, n_v={header['n_v']}) do not match "
            f"env config (n_d={resolved.env.n_d}, n_v={resolved.env.n_v})"
        )
    if args.algo is not None and header["algo"] != args.algo:
        raise ConfigError(
            f"qtable was trained by {header['algo']!r}, not {args.algo!r}"
        )
    expected_width = 9 if resolved.env.include_ego_lane else 8
    if header["state_width"] not in (None, expected_width):
        raise ConfigError(
            f"qtable states have {header['state_width']} indexes but the env observation "
            f"has {expected_width} (include_ego_lane={resolved.env.include_ego_lane})"
        )
    _write_provenance(resolved, args.out)
    env = HighwayEnv(resolved.env)
    records, trajectory = evaluate_policy(
        env,
        greedy_policy(qtable),
        episodes=args.episodes,
        seed=resolved.env.seed,
        steps_per_episode=resolved.params.steps_per_episode,
        trajectory_episode=0 if args.trajectory else None,
    )
    records_path = os.path.join(args.out, "records.csv")
    write_records_csv(records_path, [records])
    outputs = [records_path]
    if args.trajectory:
        traj_path = os.path.join(args.out, args.trajectory)
        write_trajectory(traj_path, trajectory)
        outputs.append(traj_path)
    if not args.no_figures:
        from . import figures

        outputs += figures.save_eval_figures(records, args.out)
    _check_outputs(outputs)

    n = len(records)
    collision_rate = sum(r.collision for r in records) / n if n else 0.0
    mean_distance = sum(r.distance_m for r in records) / n if n else 0.0
    mean_time = sum(r.consumed_time_s for r in records) / n if n else 0.0
    print(f"episodes: {n}")
    print(f"collision_rate: {collision_rate:.4f}")
    print(f"mean_distance_m: {mean_distance:.3f}")
    print(f"mean_consumed_time_s: {mean_time:.3f}")
    return 0


def _write_experiment_outputs(result, arm_dir):
    os.makedirs(arm_dir, exist_ok=True)
    records_path = os.path.join(arm_dir, "records.csv")
    summary_path = os.path.join(arm_dir, "summary.json")
    write_records_csv(records_path, result.records)
    write_summary_json(summary_path, result)
    return [records_path, summary_path]


def cmd_compare(args) -> int:
    resolved = _resolve(args)
    _write_provenance(resolved, args.out)
    results = compare_algorithms(
        resolved.env,
        resolved.params,
        replications=resolved.experiment.replications,
        base_seed=resolved.experiment.base_seed,
        workers=args.workers,
    )
    outputs = []
    for algo, result in results.items():
        arm_dir = os.path.join(args.out, algo)
        outputs += _write_experiment_outputs(result, arm_dir)
    report = compare_trend_report(results)
    report_path = os.path.join(args.out, "trend_report.json")
    write_json(report_path, report)
    outputs.append(report_path)
    if not args.no_figures:
        from . import figures

        outputs += figures.save_comparison_figures(results, args.out)
    _check_outputs(outputs)

    fs = report["first_success"]
    print(f"median first-success episode: sarsa={fs['median_sarsa']} "
          f"q-learning={fs['median_q_learning']} -> sarsa earlier or equal: {fs['sarsa_not_later']}")
    for algo, stats in report["collision_improvement"].items():
        print(f"{algo}: collision rate {stats['mean_first_window_rate']:.3f} -> "
              f"{stats['mean_last_window_rate']:.3f} over training, improved in "
              f"{stats['improved_replications']}/{stats['replications']} replications")
    return 0


def cmd_sweep(args) -> int:
    resolved = _resolve(args)
    _write_provenance(resolved, args.out)
    arms = sweep_epsilon(
        resolved.env,
        resolved.params,
        resolved.experiment.schedules,
        replications=resolved.experiment.replications,
        base_seed=resolved.experiment.base_seed,
        algo=resolved.experiment.algo,
        workers=args.workers,
    )
    outputs = []
    for i, arm in enumerate(arms):
        arm_dir = os.path.join(args.out, _arm_dirname(i, arm.spec.label))
        outputs += _write_experiment_outputs(arm, arm_dir)
    report = sweep_trend_report(arms)
    report_path = os.path.join(args.out, "trend_report.json")
    write_json(report_path, report)
    outputs.append(report_path)
    if not args.no_figures:
        from . import figures

        outputs += figures.save_sweep_figures(arms, args.out)
    _check_outputs(outputs)

    for arm_stats in report["arms"]:
        print(f"{arm_stats['schedule']}: trailing collision rate "
              f"{arm_stats['mean_trailing_collision_rate']:.3f}")
    if report["decay_vs_fixed_pairs"]:
        print(f"decaying epsilon lower than fixed in all pairs: "
              f"{report['decay_lower_in_all_pairs']}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
