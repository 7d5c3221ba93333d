"""CAV decision making: observations, behaviour-profile rewards, learners.

Two tabular learners stand in for deep MARL:

* :class:`IQLPolicy` - independent Q-learning. An episode is a single
  decision, so the target is the terminal reward (a contextual bandit).
* :class:`PGPolicy` - softmax policy gradient (REINFORCE with a running-mean
  baseline).

Both index their tables by :func:`bucket`, a quantisation of the
:class:`Observation` a CAV receives before acting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from .errors import EmptyGroup, ValidationError


# -- rewards -----------------------------------------------------------------

@dataclass(frozen=True)
class RewardSpec:
    """Weights on own, fleet, human and system mean travel time."""

    w_own: float = 1.0
    w_fleet: float = 0.0
    w_human: float = 0.0
    w_system: float = 0.0

    def __post_init__(self):
        if not any((self.w_own, self.w_fleet, self.w_human, self.w_system)):
            raise ValidationError("reward weights must not all be zero")

    def to_dict(self) -> dict:
        return {"w_own": self.w_own, "w_fleet": self.w_fleet, "w_human": self.w_human, "w_system": self.w_system}


BEHAVIORS = {
    "selfish": RewardSpec(1.0, 0.0, 0.0, 0.0),
    "cooperative": RewardSpec(0.0, 1.0, 0.0, 0.0),
    "social": RewardSpec(0.0, 1.0, 0.0, 0.0),
    "altruistic": RewardSpec(0.0, 0.0, 0.0, 1.0),
    "malicious": RewardSpec(0.0, 0.0, -1.0, 0.0),
}


def reward_spec(value) -> RewardSpec:
    """Preset name, weight mapping, or an existing spec."""
    if isinstance(value, RewardSpec):
        return value
    if isinstance(value, str):
        try:
            return BEHAVIORS[value]
        except KeyError:
            raise ValidationError(f"unknown behavior {value!r}; known: {sorted(BEHAVIORS)}") from None
    if isinstance(value, Mapping):
        unknown = set(value) - {"w_own", "w_fleet", "w_human", "w_system"}
        if unknown:
            raise ValidationError(f"unknown reward weights {sorted(unknown)}")
        return RewardSpec(**{k: float(v) for k, v in value.items()})
    raise ValidationError(f"cannot interpret behavior {value!r}")


def _group_mean(times: Mapping[int, float], ids: Iterable[int]) -> float:
    vals = [times[i] for i in ids]
    return math.fsum(vals) / len(vals)


def reward(spec: RewardSpec, result, self_id: int, fleet, humans) -> float:
    """Negative weighted travel time, in minutes."""
    t = result.travel_time
    total = 0.0
    if spec.w_own:
        total += spec.w_own * t[self_id]
    if spec.w_fleet:
        if not fleet:
            raise EmptyGroup("fleet")
        total += spec.w_fleet * _group_mean(t, sorted(fleet))
    if spec.w_human:
        if not humans:
            raise EmptyGroup("humans")
        total += spec.w_human * _group_mean(t, sorted(humans))
    if spec.w_system:
        total += spec.w_system * _group_mean(t, sorted(t))
    return -total / 60.0


# -- observations ------------------------------------------------------------

@dataclass(frozen=True)
class Observation:
    own_route_counts: tuple[int, ...]
    total_earlier: int


@lru_cache(maxsize=None)
def _edge_set(edges: tuple[str, ...]) -> frozenset:
    return frozenset(edges)


def observe(day_choices_so_far: Mapping, agent, routeset) -> Observation:
    """Count earlier agents whose route overlaps each of *agent*'s routes.

    ``day_choices_so_far`` maps agent id to ``(route, departure_time)`` for
    everyone who acted before *agent* today.
    """
    counts = []
    chosen = [_edge_set(r.edges) for r, _ in day_choices_so_far.values()]
    for r in routeset.routes:
        mine = _edge_set(r.edges)
        counts.append(sum(1 for other in chosen if not mine.isdisjoint(other)))
    return Observation(tuple(counts), len(chosen))


class ObservationTracker:
    """Incremental :func:`observe` for one episode.

    Keeps, per edge, the earlier agents using it, so each query unions a few
    small sets instead of scanning every earlier choice.
    """

    def __init__(self):
        self.by_edge: dict[str, list[int]] = {}
        self.total = 0

    def record(self, agent_id: int, route) -> None:
        for e in route.edges:
            self.by_edge.setdefault(e, []).append(agent_id)
        self.total += 1

    def observe(self, routeset) -> Observation:
        counts = []
        for r in routeset.routes:
            seen: set[int] = set()
            for e in r.edges:
                users = self.by_edge.get(e)
                if users:
                    seen.update(users)
            counts.append(len(seen))
        return Observation(tuple(counts), self.total)


def bucket(obs: Observation, bins: int = 5) -> tuple[int, ...]:
    """Quantise each action's load ratio ``count / total`` into *bins* bins."""
    if obs.total_earlier == 0:
        return (0,) * len(obs.own_route_counts)
    return tuple(min(int(c * bins // obs.total_earlier), bins - 1) for c in obs.own_route_counts)


# -- learners ----------------------------------------------------------------

@dataclass(frozen=True)
class AlgConfig:
    algorithm: str = "iql"
    learning_rate: float = 0.1
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_fraction: float = 0.8
    obs_bins: int = 5

    def __post_init__(self):
        if self.algorithm not in ("iql", "pg"):
            raise ValidationError(f"algorithm must be 'iql' or 'pg', got {self.algorithm!r}")
        if not self.learning_rate > 0:
            raise ValidationError("learning_rate must be positive")
        for name in ("epsilon_start", "epsilon_end", "epsilon_decay_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1]")
        if self.obs_bins < 1:
            raise ValidationError("obs_bins must be >= 1")

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "learning_rate": self.learning_rate,
            "epsilon_start": self.epsilon_start,
            "epsilon_end": self.epsilon_end,
            "epsilon_decay_fraction": self.epsilon_decay_fraction,
            "obs_bins": self.obs_bins,
        }


def _argmax_first(values: np.ndarray) -> int:
    return int(np.argmax(values))


def softmax(prefs: np.ndarray) -> np.ndarray:
    z = np.exp(prefs - prefs.max())
    return z / z.sum()


@dataclass
class IQLPolicy:
    n_actions: int
    learning_rate: float = 0.1
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    decay_steps: int = 0
    obs_bins: int = 5
    steps: int = 0
    q_table: dict = field(default_factory=dict)

    @property
    def epsilon(self) -> float:
        if self.decay_steps <= 0:
            return self.epsilon_end
        frac = min(self.steps / self.decay_steps, 1.0)
        return self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac

    def q(self, obs: Observation) -> np.ndarray:
        key = bucket(obs, self.obs_bins)
        row = self.q_table.get(key)
        return row if row is not None else np.zeros(self.n_actions)


@dataclass
class PGPolicy:
    n_actions: int
    learning_rate: float = 0.1
    obs_bins: int = 5
    baseline: float = 0.0
    updates: int = 0
    preferences: dict = field(default_factory=dict)

    def prefs(self, obs: Observation) -> np.ndarray:
        row = self.preferences.get(bucket(obs, self.obs_bins))
        return row if row is not None else np.zeros(self.n_actions)

    def probabilities(self, obs: Observation) -> np.ndarray:
        return softmax(self.prefs(obs))


def make_policy(cfg: AlgConfig, n_actions: int, training_episodes: int):
    if cfg.algorithm == "iql":
        return IQLPolicy(
            n_actions,
            learning_rate=cfg.learning_rate,
            epsilon_start=cfg.epsilon_start,
            epsilon_end=cfg.epsilon_end,
            decay_steps=int(round(cfg.epsilon_decay_fraction * training_episodes)),
            obs_bins=cfg.obs_bins,
        )
    return PGPolicy(n_actions, learning_rate=cfg.learning_rate, obs_bins=cfg.obs_bins)


def select_action(policy, obs: Observation, rng: np.random.Generator | None, mode: str = "train") -> int:
    if mode not in ("train", "test"):
        raise ValueError(f"mode must be 'train' or 'test', got {mode!r}")
    if isinstance(policy, IQLPolicy):
        q = policy.q(obs)
        if mode == "train":
            # one uniform draw per decision keeps the stream aligned across branches
            if rng.random() < policy.epsilon:
                return int(rng.integers(policy.n_actions))
        return _argmax_first(q)
    prefs = policy.prefs(obs)
    if mode == "test":
        return _argmax_first(prefs)
    cdf = np.cumsum(softmax(prefs))
    i = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(i, policy.n_actions - 1)


def update_iql(policy: IQLPolicy, obs: Observation, action: int, r: float) -> IQLPolicy:
    key = bucket(obs, policy.obs_bins)
    row = policy.q_table.get(key)
    if row is None:
        row = policy.q_table[key] = np.zeros(policy.n_actions)
    row[action] += policy.learning_rate * (r - row[action])
    policy.steps += 1
    return policy


def update_pg(policy: PGPolicy, obs: Observation, action: int, r: float) -> PGPolicy:
    key = bucket(obs, policy.obs_bins)
    row = policy.preferences.get(key)
    if row is None:
        row = policy.preferences[key] = np.zeros(policy.n_actions)
    advantage = r - policy.baseline
    grad = -softmax(row)
    grad[action] += 1.0
    row += policy.learning_rate * advantage * grad
    policy.updates += 1
    policy.baseline += (r - policy.baseline) / policy.updates
    return policy


def update(policy, obs: Observation, action: int, r: float):
    if isinstance(policy, IQLPolicy):
        return update_iql(policy, obs, action, r)
    return update_pg(policy, obs, action, r)
