"""Day-to-day human route choice: cost expectations, choice, learning.

Each driver keeps an expected travel time per route, initialised to the
route's free-flow time. After a day on route ``k`` the driver blends the old
expectation with recent experience (only when the surprise exceeds
``gamma_c``); the next morning it picks the route with the best noisy
utility ``beta * cost + noise``, unless the previous route is within
``gamma_u`` of the best expectation, or a random pick happens (prob.
``delta``).

The defaults reduce to the greedy model used in practice::

    cost[k] <- 0.8 * cost[k] + 0.2 * experienced      (chosen route only)
    action  =  argmin_k cost[k]                         (lowest index on ties)
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyRouteSet, InvalidRoute, ValidationError


@dataclass(frozen=True)
class HumanParams:
    alpha_zero: float = 0.8
    history_weights: tuple[float, ...] = (0.2,)
    gamma_c: float = 0.0
    gamma_u: float = 0.0
    delta: float = 0.0
    beta: float = -1.0
    noise_weights: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "history_weights", tuple(float(w) for w in self.history_weights))
        object.__setattr__(self, "noise_weights", tuple(float(w) for w in self.noise_weights))
        weights = (self.alpha_zero, *self.history_weights)
        if any(w < 0 for w in weights):
            raise ValidationError("human learning weights must be non-negative")
        if not self.history_weights:
            raise ValidationError("history_weights needs at least one entry")
        if abs(math.fsum(weights) - 1.0) > 1e-12:
            raise ValidationError("alpha_zero + sum(history_weights) must equal 1")
        if self.gamma_c < 0 or self.gamma_u < 0:
            raise ValidationError("thresholds must be non-negative")
        if not 0.0 <= self.delta <= 1.0:
            raise ValidationError("delta must lie in [0, 1]")
        if len(self.noise_weights) != 3 or any(w < 0 for w in self.noise_weights):
            raise ValidationError("noise_weights must be three non-negative numbers")

    @property
    def depth(self) -> int:
        return len(self.history_weights)

    @property
    def stochastic(self) -> bool:
        """True when choices consume random draws."""
        return self.delta > 0 or self.noise_weights[2] > 0

    @property
    def needs_init_noise(self) -> bool:
        return self.noise_weights[0] > 0 or self.noise_weights[1] > 0

    @classmethod
    def from_dict(cls, d: dict) -> "HumanParams":
        return cls(
            alpha_zero=d.get("alpha_zero", 0.8),
            history_weights=tuple(d.get("history_weights", (0.2,))),
            gamma_c=d.get("gamma_c", 0.0),
            gamma_u=d.get("gamma_u", 0.0),
            delta=d.get("delta", 0.0),
            beta=d.get("beta", -1.0),
            noise_weights=tuple(d.get("noise_weights", (0.0, 0.0, 0.0))),
        )

    def to_dict(self) -> dict:
        return {
            "alpha_zero": self.alpha_zero,
            "history_weights": list(self.history_weights),
            "gamma_c": self.gamma_c,
            "gamma_u": self.gamma_u,
            "delta": self.delta,
            "beta": self.beta,
            "noise_weights": list(self.noise_weights),
        }


@dataclass
class HumanMemory:
    expected_cost: list[float]
    history: list[list[float]] = field(default_factory=list)
    last_action: int | None = None
    agent_noise: float = 0.0
    route_noise: list[float] = field(default_factory=list)

    def snapshot(self) -> "HumanMemory":
        return copy.deepcopy(self)


def init_memory(routeset, params: HumanParams | None = None, rng: np.random.Generator | None = None) -> HumanMemory:
    """Fresh memory with free-flow expectations.

    When *params* asks for persistent noise, the per-agent and per-route
    components are drawn here once from *rng*.
    """
    routes = routeset.routes if hasattr(routeset, "routes") else routeset
    if len(routes) == 0:
        raise EmptyRouteSet()
    k = len(routes)
    mem = HumanMemory(
        expected_cost=[float(r.free_flow_time) for r in routes],
        history=[[] for _ in range(k)],
        route_noise=[0.0] * k,
    )
    if params is not None and params.needs_init_noise:
        if rng is None:
            raise ValidationError("persistent human noise needs a random stream")
        mem.agent_noise = float(rng.standard_normal())
        mem.route_noise = [float(x) for x in rng.standard_normal(k)]
    return mem


def human_act(memory: HumanMemory, params: HumanParams, rng: np.random.Generator | None = None) -> int:
    """Pick a route index. Never mutates *memory*."""
    cost = memory.expected_cost
    k = len(cost)
    if memory.last_action is not None and abs(cost[memory.last_action] - min(cost)) <= params.gamma_u:
        return memory.last_action
    if params.delta > 0:
        if rng.random() < params.delta:
            return int(rng.integers(k))
    w_i, w_ik, w_ikt = params.noise_weights
    utility = params.beta * np.asarray(cost, dtype=float)
    if w_i:
        utility = utility + w_i * memory.agent_noise
    if w_ik:
        utility = utility + w_ik * np.asarray(memory.route_noise)
    if w_ikt:
        utility = utility + w_ikt * rng.standard_normal(k)
    return int(np.argmax(utility))


def human_learn(memory: HumanMemory, chosen: int, experienced: float, params: HumanParams) -> HumanMemory:
    """Fold one day's experience into *memory* (in place) and return it."""
    if not isinstance(chosen, (int, np.integer)) or not 0 <= chosen < len(memory.expected_cost):
        raise InvalidRoute(chosen)
    if not experienced > 0:
        raise ValidationError(f"experienced travel time must be positive, got {experienced}")
    hist = memory.history[chosen]
    hist.append(float(experienced))
    if len(hist) > params.depth:
        del hist[0]
    memory.last_action = int(chosen)

    old = memory.expected_cost[chosen]
    if abs(old - experienced) <= params.gamma_c:
        return memory
    recent = hist[::-1]
    weights = params.history_weights[: len(recent)]
    if len(recent) < params.depth:
        # short history: stretch the available weights to the full 1 - alpha_zero
        mass = math.fsum(weights)
        if mass == 0:
            weights, mass = (1.0,), 1.0
        scale = (1.0 - params.alpha_zero) / mass
    else:
        scale = 1.0
    memory.expected_cost[chosen] = params.alpha_zero * old + math.fsum(
        scale * w * t for w, t in zip(weights, recent)
    )
    return memory
