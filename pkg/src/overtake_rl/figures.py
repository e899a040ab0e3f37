"""Report figures rendered to files next to the CSV outputs."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DPI = 150


def _rolling_mean(values, window: int):
    values = np.asarray(values, dtype=float)
    w = max(1, min(window, len(values)))
    if len(values) == 0:
        return values
    return np.convolve(values, np.ones(w) / w, mode="valid")


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def save_training_figures(records, out_dir, label="training"):
    """Collision conditions plus the learning curves for a single run."""
    episodes = [r.episode for r in records]
    collisions = [1.0 if r.collision else 0.0 for r in records]
    written = []

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(episodes, collisions, ".", color="tab:red", alpha=0.4, label="collision flag")
    if episodes:
        roll = _rolling_mean(collisions, 20)
        ax.plot(episodes[len(episodes) - len(roll):], roll, color="tab:red",
                label="rolling collision rate")
    ax.set_xlabel("episode")
    ax.set_ylabel("collision")
    ax.set_title(f"Collision conditions ({label})")
    ax.legend(loc="best")
    ax.grid(alpha=0.3)
    written.append(_save(fig, f"{out_dir}/collision_conditions.png"))

    fig, axes = plt.subplots(3, 1, figsize=(7, 8), sharex=True)
    axes[0].plot(episodes, [r.distance_m for r in records], color="tab:blue")
    axes[0].set_ylabel("travel distance (m)")
    axes[1].plot(episodes, [r.consumed_time_s for r in records], color="tab:orange")
    axes[1].set_ylabel("consumed time (s)")
    axes[2].plot(episodes, [r.cumulative_reward for r in records], color="tab:green")
    axes[2].set_ylabel("cumulative reward")
    axes[2].set_xlabel("episode")
    for ax in axes:
        ax.grid(alpha=0.3)
    axes[0].set_title(f"Learning curves ({label})")
    written.append(_save(fig, f"{out_dir}/learning_curves.png"))
    return written


def _mean_curves(summary, field):
    return summary.per_episode[field]["mean"]


def save_comparison_figures(results, out_dir):
    """Overlay per-episode means of the two algorithms."""
    written = []
    fig, ax = plt.subplots(figsize=(7, 4))
    for algo, res in results.items():
        rates = _mean_curves(res.summary, "collision")
        roll = _rolling_mean(rates, 20)
        ax.plot(range(len(rates) - len(roll), len(rates)), roll, label=algo)
    ax.set_xlabel("episode")
    ax.set_ylabel("mean collision rate")
    ax.set_title("Collision conditions, algorithm comparison")
    ax.legend(loc="best")
    ax.grid(alpha=0.3)
    written.append(_save(fig, f"{out_dir}/collision_conditions.png"))

    fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for algo, res in results.items():
        axes[0].plot(_mean_curves(res.summary, "distance_m"), label=algo)
        axes[1].plot(_mean_curves(res.summary, "consumed_time_s"), label=algo)
    axes[0].set_ylabel("travel distance (m)")
    axes[1].set_ylabel("consumed time (s)")
    axes[1].set_xlabel("episode")
    for ax in axes:
        ax.grid(alpha=0.3)
        ax.legend(loc="best")
    axes[0].set_title("Travel distance and consumed time, per-episode means")
    written.append(_save(fig, f"{out_dir}/distance_time.png"))
    return written


def save_sweep_figures(arms, out_dir):
    """Rolling mean collision rate for every schedule arm."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for arm in arms:
        rates = _mean_curves(arm.summary, "collision")
        roll = _rolling_mean(rates, 20)
        ax.plot(range(len(rates) - len(roll), len(rates)), roll, label=arm.spec.label)
    ax.set_xlabel("episode")
    ax.set_ylabel("mean collision rate")
    ax.set_title("Collision conditions per epsilon schedule")
    ax.legend(loc="best")
    ax.grid(alpha=0.3)
    return [_save(fig, f"{out_dir}/collision_conditions.png")]


def save_eval_figures(records, out_dir):
    """Distance and consumed time of the greedy evaluation episodes."""
    episodes = [r.episode for r in records]
    fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    axes[0].bar(episodes, [r.distance_m for r in records], color="tab:blue")
    axes[0].set_ylabel("travel distance (m)")
    axes[1].bar(episodes, [r.consumed_time_s for r in records], color="tab:orange")
    axes[1].set_ylabel("consumed time (s)")
    axes[1].set_xlabel("episode")
    axes[0].set_title("Greedy evaluation")
    return [_save(fig, f"{out_dir}/eval_metrics.png")]
