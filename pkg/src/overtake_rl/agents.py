"""Sparse Q-table, epsilon-greedy behavior, and the Q-learning / Sarsa trainers.

Q-learning (off-policy):  Q(s,a) += alpha * (r + beta * max_a' Q(s',a') - Q(s,a))
Sarsa      (on-policy):   Q(s,a) += alpha * (r + beta * Q(s',a')        - Q(s,a))

where Sarsa's a' is the epsilon-greedy action that will actually be taken
next, selected before the update and reused as the next behavior action.
Terminal transitions bootstrap on 0 so collision penalties are absorbing.
"""

import hashlib
import math
import random
from dataclasses import dataclass, field

from .env import ACTION_IDS, N_ACTIONS, ConfigError, DiscreteState, HighwayEnv, Terminal
from .records import EpisodeRecord

ALGORITHMS = ("q-learning", "sarsa")


def derive_seed(base, *parts) -> int:
    """Stable 64-bit child seed from a base seed and a label path."""
    text = ":".join([str(base), *(str(p) for p in parts)])
    return int.from_bytes(hashlib.sha256(text.encode("ascii")).digest()[:8], "big")


@dataclass(frozen=True)
class EpsilonSchedule:
    """Exploration probability per episode: eps0 * rate**k, or a constant."""

    kind: str = "decay"  # "decay" or "fixed"
    eps0: float = 0.1
    rate: float = 0.99

    @classmethod
    def decaying(cls, eps0: float = 0.1, rate: float = 0.99) -> "EpsilonSchedule":
        return cls("decay", eps0, rate)

    @classmethod
    def fixed(cls, eps: float) -> "EpsilonSchedule":
        return cls("fixed", eps, 1.0)

    def value(self, episode: int) -> float:
        if self.kind == "fixed":
            return self.eps0
        return self.eps0 * self.rate**episode

    def spec(self) -> str:
        if self.kind == "fixed":
            return f"fixed({self.eps0!r})"
        return f"decay({self.eps0!r}, {self.rate!r})"

    @classmethod
    def parse(cls, text: str) -> "EpsilonSchedule":
        body = text.strip()
        if body.startswith("fixed(") and body.endswith(")"):
            return cls.fixed(float(body[6:-1]))
        if body.startswith("decay(") and body.endswith(")"):
            args = [a.strip() for a in body[6:-1].split(",")]
            if len(args) != 2:
                raise ConfigError(f"decay schedule expects two arguments (got {text!r})")
            return cls.decaying(float(args[0]), float(args[1]))
        raise ConfigError(
            f"cannot parse epsilon schedule {text!r}; expected decay(eps0, rate) or fixed(eps)"
        )

    def validate(self, where: str = "epsilon_schedule") -> None:
        if self.kind not in ("decay", "fixed"):
            raise ConfigError(f"{where} kind must be decay or fixed (got {self.kind!r})")
        if not 0.0 <= self.eps0 <= 1.0:
            raise ConfigError(f"{where} epsilon must be within [0, 1] (got {self.eps0})")
        if self.kind == "decay":
            if not self.eps0 > 0.0:
                raise ConfigError(f"{where} decay base must be > 0 (got {self.eps0})")
            if not 0.0 < self.rate < 1.0:
                raise ConfigError(f"{where} decay rate must be in (0, 1) (got {self.rate})")


@dataclass
class HyperParams:
    alpha: float = 0.9
    beta: float = 0.2
    epsilon_schedule: EpsilonSchedule = field(default_factory=EpsilonSchedule)
    episodes: int = 200
    steps_per_episode: int = 1000

    def validate(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"params.alpha must be within [0, 1] (got {self.alpha})")
        if not 0.0 <= self.beta < 1.0:
            raise ConfigError(f"params.beta must be within [0, 1) (got {self.beta})")
        if self.episodes < 0:
            raise ConfigError(f"params.episodes must be >= 0 (got {self.episodes})")
        if self.steps_per_episode < 1:
            raise ConfigError(
                f"params.steps_per_episode must be >= 1 (got {self.steps_per_episode})"
            )
        self.epsilon_schedule.validate("params.epsilon_schedule")


def params_hash(params: HyperParams) -> str:
    text = (
        f"{params.alpha!r}|{params.beta!r}|{params.epsilon_schedule.spec()}"
        f"|{params.episodes}|{params.steps_per_episode}"
    )
    return hashlib.sha256(text.encode("ascii")).hexdigest()[:12]


@dataclass
class Transition:
    s: DiscreteState
    a: int
    r: float
    s_next: DiscreteState
    a_next: int | None = None
    terminal: bool = False


class QTable:
    """Sparse action-value table; never-written (state, action) pairs read as 0."""

    __slots__ = ("_values",)

    def __init__(self):
        self._values: dict[tuple[DiscreteState, int], float] = {}

    def get(self, state: DiscreteState, action: int) -> float:
        return self._values.get((state, action), 0.0)

    def set(self, state: DiscreteState, action: int, value: float) -> None:
        self._values[(state, action)] = value

    def best_action(self, state: DiscreteState) -> int:
        """Argmax over the six actions, ties broken by lowest action id."""
        best_a = 1
        best_q = self._values.get((state, 1), 0.0)
        for a in range(2, N_ACTIONS + 1):
            q = self._values.get((state, a), 0.0)
            if q > best_q:
                best_a, best_q = a, q
        return best_a

    def best_value(self, state: DiscreteState) -> float:
        return max(self._values.get((state, a), 0.0) for a in ACTION_IDS)

    def row(self, state: DiscreteState) -> list[float]:
        return [self._values.get((state, a), 0.0) for a in ACTION_IDS]

    def items(self):
        return self._values.items()

    def __len__(self) -> int:
        return len(self._values)


def epsilon_greedy(q: QTable, state: DiscreteState, eps: float, rng: random.Random) -> int:
    """With probability eps a uniform random action id, else the greedy one."""
    if rng.random() < eps:
        return rng.randrange(1, N_ACTIONS + 1)
    return q.best_action(state)


def _check_reward(r: float) -> None:
    if not math.isfinite(r):
        raise ValueError(f"reward must be finite (got {r})")


def q_learning_update(q: QTable, t: Transition, alpha: float, beta: float) -> QTable:
    _check_reward(t.r)
    bootstrap = 0.0 if t.terminal else q.best_value(t.s_next)
    old = q.get(t.s, t.a)
    q.set(t.s, t.a, old + alpha * (t.r + beta * bootstrap - old))
    return q


def sarsa_update(q: QTable, t: Transition, alpha: float, beta: float) -> QTable:
    _check_reward(t.r)
    if t.terminal:
        bootstrap = 0.0
    else:
        if t.a_next is None:
            raise ValueError("sarsa_update needs a_next on non-terminal transitions")
        bootstrap = q.get(t.s_next, t.a_next)
    old = q.get(t.s, t.a)
    q.set(t.s, t.a, old + alpha * (t.r + beta * bootstrap - old))
    return q


def greedy_policy(q: QTable):
    """Pure greedy policy: state -> argmax action, lowest id on ties.

    States never seen map to action 1 (the all-zero row tie-break), which is
    lane 1 + accelerate.
    """

    def policy(state: DiscreteState) -> int:
        return q.best_action(state)

    return policy


def train(env_factory, algo: str, params: HyperParams, seed: int, transition_callback=None):
    """Train one agent; returns (QTable, per-episode EpisodeRecord list).

    Episodes end at the goal, a collision, or the step budget.  Episode k
    resets the environment with a seed derived from (seed, k); the behavior
    stream has its own derived seed, so runs are reproducible bit-for-bit.
    ``transition_callback``, if given, sees every transition in update order.
    """
    if algo not in ALGORITHMS:
        raise ConfigError(f"algo must be one of {ALGORITHMS} (got {algo!r})")
    params.validate()
    env: HighwayEnv = env_factory()
    q = QTable()
    records: list[EpisodeRecord] = []
    behavior_rng = random.Random(derive_seed(seed, "agent"))
    dt = env.config.dt_s
    sarsa = algo == "sarsa"

    for ep in range(params.episodes):
        eps = params.epsilon_schedule.value(ep)
        obs = env.reset(seed=derive_seed(seed, "episode", ep), max_steps=params.steps_per_episode)
        total_reward = 0.0
        if sarsa:
            a = epsilon_greedy(q, obs, eps, behavior_rng)
        for _ in range(params.steps_per_episode):
            if not sarsa:
                a = epsilon_greedy(q, obs, eps, behavior_rng)
            out = env.step(a)
            done = out.terminal is not Terminal.RUNNING
            if sarsa:
                a_next = None if done else epsilon_greedy(q, out.observation, eps, behavior_rng)
                t = Transition(obs, a, out.reward, out.observation, a_next, done)
                sarsa_update(q, t, params.alpha, params.beta)
                a = a_next
            else:
                t = Transition(obs, a, out.reward, out.observation, None, done)
                q_learning_update(q, t, params.alpha, params.beta)
            if transition_callback is not None:
                transition_callback(t)
            total_reward += out.reward
            obs = out.observation
            if done:
                break
        records.append(
            EpisodeRecord(
                episode=ep,
                collision=env.terminal is Terminal.COLLISION,
                distance_m=env.ego.position_m,
                consumed_time_s=env.steps * dt,
                cumulative_reward=total_reward,
                epsilon_used=eps,
            )
        )
    return q, records


def evaluate_policy(env, policy, episodes: int, seed: int, steps_per_episode: int,
                    trajectory_episode: int | None = None):
    """Roll out a fixed policy; returns (records, trajectory rows).

    Trajectory rows (step, x_e, v_e, lane, action_id, reward, terminal) are
    captured only for ``trajectory_episode``; otherwise the list is empty.
    """
    records: list[EpisodeRecord] = []
    trajectory: list[tuple] = []
    dt = env.config.dt_s
    for ep in range(episodes):
        obs = env.reset(seed=derive_seed(seed, "episode", ep), max_steps=steps_per_episode)
        total_reward = 0.0
        capture = trajectory_episode == ep
        while True:
            a = policy(obs)
            out = env.step(a)
            total_reward += out.reward
            if capture:
                trajectory.append(
                    (env.steps, out.ego.position_m, out.ego.velocity_mps,
                     out.ego.lane, a, out.reward, out.terminal.value)
                )
            obs = out.observation
            if out.terminal is not Terminal.RUNNING:
                break
        records.append(
            EpisodeRecord(
                episode=ep,
                collision=env.terminal is Terminal.COLLISION,
                distance_m=env.ego.position_m,
                consumed_time_s=env.steps * dt,
                cumulative_reward=total_reward,
                epsilon_used=0.0,
            )
        )
    return records, trajectory


QTABLE_HEADER_KEYS = ("n_d", "n_v", "algo", "params_hash")


def save_qtable(q: QTable, path, n_d: int, n_v: int, algo: str, params: HyperParams) -> None:
    """One line per stored entry: D1..D4,V1..V4,action_id,value (repr floats).

    Entries are sorted so identical tables serialize to identical bytes.
    With include_ego_lane the state carries a ninth index column.
    """
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"n_d={n_d},n_v={n_v},algo={algo},params_hash={params_hash(params)}\n")
        for (state, action), value in sorted(q.items()):
            fh.write(",".join(str(i) for i in state) + f",{action},{value!r}\n")


def load_qtable(path):
    """Inverse of save_qtable; returns (QTable, header dict)."""
    q = QTable()
    with open(path, "r", encoding="ascii") as fh:
        header_line = fh.readline().strip()
        header = {}
        for part in header_line.split(","):
            key, _, val = part.partition("=")
            if key not in QTABLE_HEADER_KEYS:
                raise ConfigError(f"unexpected qtable header field {key!r} in {path}")
            header[key] = val
        missing = [k for k in QTABLE_HEADER_KEYS if k not in header]
        if missing:
            raise ConfigError(f"qtable header missing fields {missing} in {path}")
        header["n_d"] = int(header["n_d"])
        header["n_v"] = int(header["n_v"])
        header["state_width"] = None
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            state = tuple(int(x) for x in parts[:-2])
            if header["state_width"] is None:
                header["state_width"] = len(state)
            elif header["state_width"] != len(state):
                raise ConfigError(f"inconsistent state width in qtable {path}")
            q.set(state, int(parts[-2]), float(parts[-1]))
    return q, header
