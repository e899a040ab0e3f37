"""Two-lane highway overtaking environment.

A single controlled (ego) vehicle starts at the road origin in lane 1 and
tries to reach the end of the road quickly without colliding with any of the
2n uncontrolled vehicles (n per lane).  All vehicles travel in the same
direction.  Each step the ego picks one of six actions (target lane plus
accelerate / decelerate / maintain); surrounding vehicles follow a bounded
random walk in speed and never change lane.

The observation is the discretized relative distance and relative speed of
the nearest vehicle ahead and behind in each lane (at most four neighbors),
so the state the agent sees is a tuple of eight small integers.
"""

import enum
import math
import random
from dataclasses import dataclass, replace


class ConfigError(ValueError):
    """Invalid configuration value; the message names the key and bound."""


class Terminal(str, enum.Enum):
    RUNNING = "running"
    GOAL = "goal-reached"
    COLLISION = "collision"
    STEP_LIMIT = "step-limit"


class CollisionReason(str, enum.Enum):
    # Road-edge crashes cannot happen while actions select absolute lanes
    # 1/2 only; the reason is kept so a lateral model could add it.
    VEHICLE = "vehicle"
    ROAD_EDGE = "road-edge"


@dataclass(frozen=True)
class Action:
    id: int
    lane: int
    accel: float


# Action ids 1..6: lane choice crossed with accelerate (+1), decelerate (-1),
# maintain (0) m/s^2, in that order per lane.
ACTIONS = (
    Action(1, 1, 1.0),
    Action(2, 1, -1.0),
    Action(3, 1, 0.0),
    Action(4, 2, 1.0),
    Action(5, 2, -1.0),
    Action(6, 2, 0.0),
)
N_ACTIONS = len(ACTIONS)
ACTION_IDS = tuple(a.id for a in ACTIONS)

# Observation: 4 distance indices then 4 speed indices, slot order
# (lane1-front, lane1-rear, lane2-front, lane2-rear).
DiscreteState = tuple[int, ...]

SLOT_IDS = ("lane1-front", "lane1-rear", "lane2-front", "lane2-rear")


@dataclass
class VehicleState:
    position_m: float
    velocity_mps: float
    accel_mps2: float
    lane: int


@dataclass(frozen=True)
class NeighborSlot:
    slot_id: str
    present: bool
    rel_distance_m: float
    rel_speed_mps: float


@dataclass
class EnvConfig:
    """Environment parameters; every field maps to a config-file key.

    Default speeds keep -10*(v - v_e_max)^2 above the -100 collision
    penalty for every reachable v (needs v_e_max <= sqrt(10)), so crashing
    is always the single worst outcome and avoidance is worth learning.
    """

    n_per_lane: int = 5
    road_length_m: float = 1000.0
    dt_s: float = 1.0
    x_max_m: float = 30.0
    n_d: int = 3
    n_v: int = 1
    v_e_max_mps: float = 3.0
    v_i_max_mps: float = 2.0
    d_collision_m: float = 5.0
    seed: int = 0
    spawn_min_m: float = 500.0
    spawn_max_m: float = 900.0
    spawn_jitter_m: float = 20.0
    spawn_speed_frac: float = 0.25
    include_ego_lane: bool = False

    def validate(self) -> None:
        def positive(name, value):
            if not value > 0:
                raise ConfigError(f"env.{name} must be > 0 (got {value})")

        if self.n_per_lane < 0:
            raise ConfigError(f"env.n_per_lane must be >= 0 (got {self.n_per_lane})")
        positive("road_length_m", self.road_length_m)
        positive("dt_s", self.dt_s)
        positive("x_max_m", self.x_max_m)
        positive("v_e_max_mps", self.v_e_max_mps)
        positive("v_i_max_mps", self.v_i_max_mps)
        positive("d_collision_m", self.d_collision_m)
        if self.n_d < 1:
            raise ConfigError(f"env.n_d must be >= 1 (got {self.n_d})")
        if self.n_v < 1:
            raise ConfigError(f"env.n_v must be >= 1 (got {self.n_v})")
        if self.spawn_min_m < 0 or self.spawn_max_m < self.spawn_min_m:
            raise ConfigError(
                "env spawn band must satisfy 0 <= spawn_min_m <= spawn_max_m "
                f"(got [{self.spawn_min_m}, {self.spawn_max_m}])"
            )
        if self.spawn_jitter_m < 0:
            raise ConfigError(f"env.spawn_jitter_m must be >= 0 (got {self.spawn_jitter_m})")
        if not 0.0 <= self.spawn_speed_frac <= 1.0:
            raise ConfigError(
                f"env.spawn_speed_frac must be within [0, 1] (got {self.spawn_speed_frac})"
            )


@dataclass
class StepOutcome:
    observation: DiscreteState
    reward: float
    terminal: Terminal
    ego: VehicleState
    collision_reason: CollisionReason | None = None


def round_half_away_from_zero(x: float) -> int:
    """Round with .5 going away from zero, regardless of platform mode."""
    if x >= 0:
        return int(math.floor(x + 0.5))
    return int(math.ceil(x - 0.5))


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def trapezoid_displacement(v_prev: float, v_new: float, dt: float) -> float:
    """Distance covered while speed moves linearly from v_prev to v_new.

    Algebraically equal to (v_new^2 - v_prev^2) / (2a) with
    a = (v_new - v_prev) / dt, but defined when a = 0.
    """
    return 0.5 * (v_prev + v_new) * dt


def _ego_motion(v_prev: float, accel: float, dt: float, v_max: float) -> tuple[float, float]:
    """New ego speed and displacement with the [0, v_max] clamp applied.

    When the clamp binds mid-step the ego accelerates until it hits the
    bound, then holds it, so position stays consistent with realized speed.
    """
    v_raw = v_prev + accel * dt
    v_new = _clamp(v_raw, 0.0, v_max)
    if v_new == v_raw or accel == 0.0:
        return v_new, v_prev * dt + 0.5 * accel * dt * dt
    t_bound = (v_new - v_prev) / accel
    dx = v_prev * t_bound + 0.5 * accel * t_bound * t_bound + v_new * (dt - t_bound)
    return v_new, dx


def discretize(slots: tuple[NeighborSlot, ...], config: EnvConfig) -> DiscreteState:
    """Map the four neighbor slots to the 8-integer observation.

    Distance index: round(dx * n_d / x_max) clamped to [0, n_d].
    Speed index:    round(dv * n_v / v_i_max) clamped to [0, n_v].
    """
    d = tuple(
        int(_clamp(round_half_away_from_zero(s.rel_distance_m * config.n_d / config.x_max_m), 0, config.n_d))
        for s in slots
    )
    v = tuple(
        int(_clamp(round_half_away_from_zero(s.rel_speed_mps * config.n_v / config.v_i_max_mps), 0, config.n_v))
        for s in slots
    )
    return d + v


class HighwayEnv:
    """Deterministic, seedable episode simulator.

    One instance runs one episode at a time: ``reset()`` places the traffic
    and returns the initial observation, ``step()`` advances one sampling
    interval.  Instances are independent; each owns its RNG stream.
    """

    def __init__(self, config: EnvConfig):
        config.validate()
        self.config = config
        self.ego: VehicleState | None = None
        self.traffic: list[VehicleState] = []
        self._rng = random.Random(config.seed)
        self._steps = 0
        self._max_steps: int | None = None
        self._terminal = Terminal.RUNNING

    @property
    def steps(self) -> int:
        return self._steps

    @property
    def terminal(self) -> Terminal:
        return self._terminal

    def reset(self, seed=None, max_steps: int | None = None) -> DiscreteState:
        """Start a new episode; identical (config, seed) gives identical placements."""
        cfg = self.config
        cfg.validate()
        self._rng = random.Random(cfg.seed if seed is None else seed)
        self.ego = VehicleState(0.0, 0.0, 0.0, lane=1)
        self.traffic = []
        band = cfg.spawn_max_m - cfg.spawn_min_m
        v_lo = cfg.spawn_speed_frac * cfg.v_i_max_mps
        # One uniform grid of 2n anchors across the band, assigned to lanes
        # alternately, so traffic is staggered rather than side by side.
        total = 2 * cfg.n_per_lane
        for k in range(total):
            anchor = cfg.spawn_min_m + (k + 0.5) * band / total
            x = _clamp(
                anchor + self._rng.uniform(-cfg.spawn_jitter_m, cfg.spawn_jitter_m),
                cfg.spawn_min_m,
                cfg.spawn_max_m,
            )
            v = self._rng.uniform(v_lo, cfg.v_i_max_mps)
            self.traffic.append(VehicleState(x, v, 0.0, lane=1 + k % 2))
        self._steps = 0
        self._max_steps = max_steps
        self._terminal = Terminal.RUNNING
        return self.observe()

    def neighbors(self) -> tuple[NeighborSlot, NeighborSlot, NeighborSlot, NeighborSlot]:
        """Nearest front/rear vehicle per lane; absent slots use the sentinel.

        The sentinel (distance x_max, relative speed 0) is what a vehicle
        sitting exactly at the detection horizon would produce, so "nothing
        there" and "vehicle at the horizon" look identical to the policy.
        """
        if self.ego is None:
            raise RuntimeError("environment not initialized; call reset() first")
        cfg = self.config
        x_e = self.ego.position_m
        v_e = self.ego.velocity_mps
        # nearest[lane] = [front vehicle, rear vehicle]
        nearest: dict[int, list[VehicleState | None]] = {1: [None, None], 2: [None, None]}
        for veh in self.traffic:
            gap = veh.position_m - x_e
            slot = 0 if gap >= 0 else 1
            cur = nearest[veh.lane][slot]
            if cur is None or abs(gap) < abs(cur.position_m - x_e):
                nearest[veh.lane][slot] = veh
        slots = []
        for i, slot_id in enumerate(SLOT_IDS):
            veh = nearest[1 + i // 2][i % 2]
            if veh is None:
                slots.append(NeighborSlot(slot_id, False, cfg.x_max_m, 0.0))
            else:
                dx = min(abs(veh.position_m - x_e), cfg.x_max_m)
                slots.append(NeighborSlot(slot_id, True, dx, abs(veh.velocity_mps - v_e)))
        return tuple(slots)

    def observe(self) -> DiscreteState:
        obs = discretize(self.neighbors(), self.config)
        if self.config.include_ego_lane:
            obs = obs + (self.ego.lane,)
        return obs

    def check_collision(self) -> bool:
        """True iff a surrounding vehicle shares the ego lane within d_collision."""
        ego = self.ego
        d = self.config.d_collision_m
        return any(
            veh.lane == ego.lane and abs(veh.position_m - ego.position_m) < d
            for veh in self.traffic
        )

    def step(self, action: int | Action) -> StepOutcome:
        """Advance one sampling interval.

        Order: lane switch (instantaneous), ego longitudinal update,
        surrounding-vehicle updates, then termination and reward.  Reaching
        the road end counts as the goal even if a vehicle sits nearby at
        that final step; collisions only occur on the road.
        """
        if self.ego is None:
            raise RuntimeError("environment not initialized; call reset() first")
        if self._terminal is not Terminal.RUNNING:
            raise RuntimeError(f"episode already ended ({self._terminal.value}); call reset()")
        act = ACTIONS[action - 1] if isinstance(action, int) else action
        cfg = self.config
        dt = cfg.dt_s
        ego = self.ego

        ego.lane = act.lane
        v_prev = ego.velocity_mps
        v_new, dx = _ego_motion(v_prev, act.accel, dt, cfg.v_e_max_mps)
        ego.velocity_mps = v_new
        ego.position_m += dx
        ego.accel_mps2 = (v_new - v_prev) / dt

        for veh in self.traffic:
            w_prev = veh.velocity_mps
            w_new = _clamp(w_prev + self._rng.choice((-1.0, 0.0, 1.0)), 0.0, cfg.v_i_max_mps)
            veh.position_m += trapezoid_displacement(w_prev, w_new, dt)
            veh.velocity_mps = w_new
            veh.accel_mps2 = (w_new - w_prev) / dt

        self._steps += 1
        collided = False
        if ego.position_m >= cfg.road_length_m:
            self._terminal = Terminal.GOAL
        else:
            collided = self.check_collision()
            if collided:
                self._terminal = Terminal.COLLISION
            elif self._max_steps is not None and self._steps >= self._max_steps:
                self._terminal = Terminal.STEP_LIMIT

        if collided:
            reward = -100.0
        else:
            diff = v_new - cfg.v_e_max_mps
            reward = -10.0 * diff * diff
        return StepOutcome(
            observation=self.observe(),
            reward=reward,
            terminal=self._terminal,
            ego=replace(ego),
            collision_reason=CollisionReason.VEHICLE if collided else None,
        )


TRAJECTORY_HEADER = ("step", "x_e", "v_e", "lane", "action_id", "reward", "terminal")


def write_trajectory(path, rows) -> None:
    """Write per-step rows (step, x_e, v_e, lane, action_id, reward, terminal) as CSV."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(TRAJECTORY_HEADER) + "\n")
        for row in rows:
            step, x_e, v_e, lane, action_id, reward, terminal = row
            fh.write(f"{step},{x_e!r},{v_e!r},{lane},{action_id},{reward!r},{terminal}\n")
