import pytest

from overtake_rl import EnvConfig, EpsilonSchedule, HyperParams


@pytest.fixture
def tiny_params():
    """Small training budget for fast unit tests."""
    return HyperParams(episodes=5, steps_per_episode=60,
                       epsilon_schedule=EpsilonSchedule.decaying(0.1, 0.99))


@pytest.fixture
def tiny_env_config():
    return EnvConfig(n_per_lane=2, road_length_m=200.0)
