"""Seeded experiment orchestration and aggregate statistics.

The published studies this reproduces are single noisy traces; here every
experiment runs ``replications`` independent trainings (replication k uses
seed = base_seed + k) and trends are computed on the aggregate: per-episode
mean/min/max curves, first-success episodes, and the collision rate over a
trailing window of episodes.
"""

import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

from .agents import ALGORITHMS, HyperParams, train
from .env import ConfigError, EnvConfig, HighwayEnv
from .records import EpisodeRecord

TRAILING_WINDOW = 50

_RECORD_FIELDS = ("collision", "distance_m", "consumed_time_s", "cumulative_reward", "epsilon_used")


@dataclass
class ExperimentSpec:
    label: str
    env: EnvConfig
    algo: str
    params: HyperParams
    replications: int = 20
    base_seed: int = 0

    def validate(self) -> None:
        if self.algo not in ALGORITHMS:
            raise ConfigError(f"experiment.algo must be one of {ALGORITHMS} (got {self.algo!r})")
        if self.replications < 1:
            raise ConfigError(
                f"experiment.replications must be >= 1 (got {self.replications})"
            )
        self.env.validate()
        self.params.validate()


@dataclass
class Summary:
    label: str
    replications: int
    episodes: int
    trailing_window: int
    per_episode: dict[str, dict[str, list[float]]]
    first_success_episode: list[int | None]
    trailing_collision_rate: list[float]

    def mean_trailing_collision_rate(self) -> float:
        return _mean(self.trailing_collision_rate)

    def median_first_success(self, censor: int | None = None) -> float | None:
        """Median first-success episode; never-successful replications count
        as the episode budget (censored)."""
        if not self.first_success_episode:
            return None
        if censor is None:
            censor = self.episodes
        return statistics.median(
            censor if fs is None else fs for fs in self.first_success_episode
        )


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    records: list[list[EpisodeRecord]]
    summary: Summary


def _mean(xs) -> float:
    # exact rational mean: guarantees min <= mean <= max even at ulp scale
    xs = list(xs)
    if not xs:
        return 0.0
    return float(statistics.mean(xs))


def summarize(matrix: list[list[EpisodeRecord]], road_length_m: float, label: str = "",
              trailing_window: int = TRAILING_WINDOW) -> Summary:
    """Aggregate a replication-major record matrix."""
    n_rep = len(matrix)
    n_ep = len(matrix[0]) if matrix else 0
    per_episode: dict[str, dict[str, list[float]]] = {}
    for name in _RECORD_FIELDS:
        means, mins, maxs = [], [], []
        for ep in range(n_ep):
            values = [float(getattr(matrix[rep][ep], name)) for rep in range(n_rep)]
            means.append(_mean(values))
            mins.append(min(values))
            maxs.append(max(values))
        per_episode[name] = {"mean": means, "min": mins, "max": maxs}

    first_success: list[int | None] = []
    trailing: list[float] = []
    window = min(trailing_window, n_ep) if n_ep else 0
    for rep_records in matrix:
        fs = next((r.episode for r in rep_records if r.distance_m >= road_length_m), None)
        first_success.append(fs)
        tail = rep_records[-window:] if window else []
        trailing.append(_mean(float(r.collision) for r in tail))
    return Summary(
        label=label,
        replications=n_rep,
        episodes=n_ep,
        trailing_window=window,
        per_episode=per_episode,
        first_success_episode=first_success,
        trailing_collision_rate=trailing,
    )


def _replication_records(spec: ExperimentSpec, k: int) -> list[EpisodeRecord]:
    _, records = train(
        lambda: HighwayEnv(spec.env), spec.algo, spec.params, seed=spec.base_seed + k
    )
    return records


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> ExperimentResult:
    """Run all replications of one experiment.

    Replications are independent (pure seed derivation), so the output is
    identical whether they run serially or across ``workers`` processes.
    """
    spec.validate()
    if workers > 1 and spec.replications > 1:
        with ProcessPoolExecutor(max_workers=min(workers, spec.replications)) as pool:
            matrix = list(pool.map(_replication_records, [spec] * spec.replications,
                                   range(spec.replications)))
    else:
        matrix = [_replication_records(spec, k) for k in range(spec.replications)]
    summary = summarize(matrix, spec.env.road_length_m, label=spec.label)
    return ExperimentResult(spec=spec, records=matrix, summary=summary)


def compare_algorithms(env: EnvConfig, params: HyperParams, replications: int = 20,
                       base_seed: int = 0, workers: int = 1) -> dict[str, ExperimentResult]:
    """Both algorithms on identical seeds and config, keyed by algorithm name."""
    results = {}
    for algo in ALGORITHMS:
        spec = ExperimentSpec(label=algo, env=env, algo=algo, params=params,
                              replications=replications, base_seed=base_seed)
        results[algo] = run_experiment(spec, workers=workers)
    return results


def sweep_epsilon(env: EnvConfig, params: HyperParams, schedules, replications: int = 20,
                  base_seed: int = 0, algo: str = "sarsa", workers: int = 1) -> list[ExperimentResult]:
    """One experiment per schedule on common seeds; duplicates stay separate arms."""
    schedules = list(schedules)
    if not schedules:
        raise ConfigError("empty sweep: experiment.schedules must list at least one schedule")
    arms = []
    for sched in schedules:
        spec = ExperimentSpec(
            label=sched.spec(),
            env=env,
            algo=algo,
            params=replace(params, epsilon_schedule=sched),
            replications=replications,
            base_seed=base_seed,
        )
        arms.append(run_experiment(spec, workers=workers))
    return arms


# --- trend checks -----------------------------------------------------------

def collision_improvement(matrix: list[list[EpisodeRecord]], window: int = TRAILING_WINDOW) -> dict:
    """Per replication, did the trailing-window collision rate drop below the
    leading-window rate?"""
    improved = 0
    first_rates, last_rates = [], []
    w = min(window, len(matrix[0]) if matrix else 0)
    for rep_records in matrix:
        first = _mean(float(r.collision) for r in rep_records[:w])
        last = _mean(float(r.collision) for r in rep_records[-w:]) if w else 0.0
        first_rates.append(first)
        last_rates.append(last)
        if last < first:
            improved += 1
    return {
        "window": w,
        "replications": len(matrix),
        "improved_replications": improved,
        "mean_first_window_rate": _mean(first_rates),
        "mean_last_window_rate": _mean(last_rates),
    }


def mean_trailing_consumed_time(matrix: list[list[EpisodeRecord]],
                                window: int = TRAILING_WINDOW) -> float:
    w = min(window, len(matrix[0]) if matrix else 0)
    return _mean(_mean(r.consumed_time_s for r in rep[-w:]) for rep in matrix) if w else 0.0


def compare_trend_report(results: dict[str, ExperimentResult]) -> dict:
    """Trend verdicts for the two-algorithm comparison."""
    report: dict = {"kind": "compare"}
    collision = {}
    for algo, res in results.items():
        stats = collision_improvement(res.records)
        stats["held"] = stats["improved_replications"] > stats["replications"] // 2
        collision[algo] = stats
    report["collision_improvement"] = collision

    med_q = results["q-learning"].summary.median_first_success()
    med_s = results["sarsa"].summary.median_first_success()
    report["first_success"] = {
        "median_q_learning": med_q,
        "median_sarsa": med_s,
        "sarsa_not_later": (med_s is not None and med_q is not None and med_s <= med_q),
    }
    report["mean_trailing_consumed_time_s"] = {
        algo: mean_trailing_consumed_time(res.records) for algo, res in results.items()
    }
    return report


def density_trend_report(sparse: ExperimentResult, dense: ExperimentResult) -> dict:
    """Consumed-time comparison between two traffic densities.

    The claim under test is that denser traffic lengthens the consumed
    time; ``held`` records whether the data actually shows that, so a
    failed trend is reported rather than hidden.
    """
    t_sparse = mean_trailing_consumed_time(sparse.records)
    t_dense = mean_trailing_consumed_time(dense.records)
    return {
        "kind": "density",
        "n_sparse": sparse.spec.env.n_per_lane,
        "n_dense": dense.spec.env.n_per_lane,
        "mean_trailing_consumed_time_s": {"sparse": t_sparse, "dense": t_dense},
        "held": t_dense > t_sparse,
    }


def sweep_trend_report(arms: list[ExperimentResult]) -> dict:
    """Trailing collision rates per schedule, plus decay-vs-fixed verdicts."""
    arm_stats = [
        {
            "schedule": arm.spec.label,
            "mean_trailing_collision_rate": arm.summary.mean_trailing_collision_rate(),
        }
        for arm in arms
    ]
    pairs = []
    for d in arms:
        if d.spec.params.epsilon_schedule.kind != "decay":
            continue
        for f in arms:
            if f.spec.params.epsilon_schedule.kind != "fixed":
                continue
            pairs.append(
                {
                    "decay": d.spec.label,
                    "fixed": f.spec.label,
                    "fixed_rate_higher": f.summary.mean_trailing_collision_rate()
                    > d.summary.mean_trailing_collision_rate(),
                }
            )
    return {
        "kind": "sweep",
        "arms": arm_stats,
        "decay_vs_fixed_pairs": pairs,
        "decay_lower_in_all_pairs": bool(pairs) and all(p["fixed_rate_higher"] for p in pairs),
    }


# --- serialization ----------------------------------------------------------

def spec_to_dict(spec: ExperimentSpec) -> dict:
    d = {
        "label": spec.label,
        "algo": spec.algo,
        "replications": spec.replications,
        "base_seed": spec.base_seed,
        "env": asdict(spec.env),
        "params": asdict(spec.params),
    }
    d["params"]["epsilon_schedule"] = spec.params.epsilon_schedule.spec()
    return d


def summary_to_dict(summary: Summary) -> dict:
    return {
        "label": summary.label,
        "replications": summary.replications,
        "episodes": summary.episodes,
        "trailing_window": summary.trailing_window,
        "per_episode": summary.per_episode,
        "first_success_episode": summary.first_success_episode,
        "trailing_collision_rate": summary.trailing_collision_rate,
        "mean_trailing_collision_rate": summary.mean_trailing_collision_rate(),
        "median_first_success_episode": summary.median_first_success(),
    }


def write_summary_json(path, result: ExperimentResult) -> None:
    payload = {"spec": spec_to_dict(result.spec), "summary": summary_to_dict(result.summary)}
    write_json(path, payload)


def write_json(path, obj) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
