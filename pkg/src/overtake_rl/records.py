"""Per-episode training/evaluation metrics and their CSV serialization."""

from dataclasses import dataclass

RECORDS_HEADER = (
    "replication",
    "episode",
    "collision",
    "distance_m",
    "consumed_time_s",
    "cumulative_reward",
    "epsilon_used",
)


@dataclass
class EpisodeRecord:
    episode: int
    collision: bool
    distance_m: float
    consumed_time_s: float
    cumulative_reward: float
    epsilon_used: float


def write_records_csv(path, matrix: list[list[EpisodeRecord]]) -> None:
    """Write a replication-major record matrix; floats use repr for lossless round-trip."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(RECORDS_HEADER) + "\n")
        for rep, episode_records in enumerate(matrix):
            for rec in episode_records:
                fh.write(
                    f"{rep},{rec.episode},{int(rec.collision)},{rec.distance_m!r},"
                    f"{rec.consumed_time_s!r},{rec.cumulative_reward!r},{rec.epsilon_used!r}\n"
                )
