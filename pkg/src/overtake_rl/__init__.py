"""Two-lane overtaking MDP with tabular Q-learning and Sarsa."""

from .agents import (
    ALGORITHMS,
    EpsilonSchedule,
    HyperParams,
    QTable,
    Transition,
    derive_seed,
    epsilon_greedy,
    evaluate_policy,
    greedy_policy,
    load_qtable,
    q_learning_update,
    sarsa_update,
    save_qtable,
    train,
)
from .config import ExperimentSettings, ResolvedConfig, load_config, to_ini_text
from .env import (
    ACTIONS,
    Action,
    CollisionReason,
    ConfigError,
    DiscreteState,
    EnvConfig,
    HighwayEnv,
    NeighborSlot,
    StepOutcome,
    Terminal,
    VehicleState,
    discretize,
    trapezoid_displacement,
)
from .harness import (
    ExperimentResult,
    ExperimentSpec,
    Summary,
    compare_algorithms,
    run_experiment,
    summarize,
    sweep_epsilon,
)
from .records import EpisodeRecord, write_records_csv

__version__ = "0.1.0"
