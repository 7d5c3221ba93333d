"""Non-learning reference policies: all-or-nothing, uniform random, human stand-in."""

from __future__ import annotations

import enum

import numpy as np

from .errors import EmptyRouteSet, ValidationError
from .human import HumanMemory, HumanParams, human_act


class BaselineKind(str, enum.Enum):
    AON = "aon"
    RANDOM = "random"
    HUMAN = "human"


def aon_act(routeset) -> int:
    """Index of the minimal free-flow route (lowest index on ties)."""
    if len(routeset.routes) == 0:
        raise EmptyRouteSet()
    times = [r.free_flow_time for r in routeset.routes]
    return times.index(min(times))


def random_act(k: int, rng: np.random.Generator) -> int:
    if k < 1:
        raise ValidationError("need at least one action")
    return int(rng.integers(k))


def human_stand_in_act(frozen_memory: HumanMemory, params: HumanParams, rng: np.random.Generator | None = None) -> int:
    """Act with a human memory that no longer learns."""
    return human_act(frozen_memory, params, rng)
