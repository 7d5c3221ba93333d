"""Trip demand: the fixed agent population and the human-to-CAV mutation."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DuplicateId, MissingFile, NegativeDeparture, ParseError, ValidationError
from .marl import RewardSpec

AGENTS_HEADER = ("id", "origin", "destination", "start_time")

HUMAN = "human"
CAV = "cav"


@dataclass(frozen=True)
class AgentSpec:
    id: int
    origin: str
    destination: str
    departure_time: float
    kind: str = HUMAN
    behavior: RewardSpec | None = None

    @property
    def is_cav(self) -> bool:
        return self.kind == CAV

    @property
    def od(self) -> tuple[str, str]:
        return (self.origin, self.destination)


class Selection(str, enum.Enum):
    UNIFORM = "uniform"
    EARLIEST = "earliest"
    LATEST = "latest"


@dataclass(frozen=True)
class MutationPolicy:
    share: float
    selection: Selection = Selection.UNIFORM

    def __post_init__(self):
        if not 0.0 <= self.share <= 1.0:
            raise ValidationError(f"CAV share must lie in [0, 1], got {self.share}")
        object.__setattr__(self, "selection", Selection(self.selection))


def load_agents(path) -> list[AgentSpec]:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path)
    agents: list[AgentSpec] = []
    seen: set[int] = set()
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(c.strip() for c in header) != AGENTS_HEADER:
            raise ParseError(path, 1, f"expected header {','.join(AGENTS_HEADER)}")
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            ln = reader.line_num
            if len(row) != len(AGENTS_HEADER):
                raise ParseError(path, ln, f"expected {len(AGENTS_HEADER)} fields")
            try:
                agent_id = int(row[0])
                start = float(row[3])
            except ValueError:
                raise ParseError(path, ln, "id must be an integer and start_time a number") from None
            if agent_id < 0:
                raise ParseError(path, ln, "negative agent id")
            if not math.isfinite(start):
                raise ParseError(path, ln, "non-finite start_time")
            if agent_id in seen:
                raise DuplicateId(agent_id)
            if start < 0:
                raise NegativeDeparture(agent_id)
            seen.add(agent_id)
            agents.append(AgentSpec(agent_id, row[1].strip(), row[2].strip(), start))
    return agents


def write_agents(agents: Sequence[AgentSpec], path) -> None:
    with open(Path(path), "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(AGENTS_HEADER)
        for a in agents:
            start = int(a.departure_time) if float(a.departure_time).is_integer() else a.departure_time
            w.writerow([a.id, a.origin, a.destination, start])


def check_departure_window(agents: Sequence[AgentSpec], window_s: float) -> None:
    for a in agents:
        if a.departure_time > window_s:
            raise ValidationError(
                f"agent {a.id} departs at {a.departure_time:g} s, outside the {window_s:g} s window"
            )


def cav_count(share: float, n: int) -> int:
    """``share * n`` rounded half away from zero."""
    return int(math.floor(share * n + 0.5))


def mutate(
    agents: Sequence[AgentSpec],
    policy: MutationPolicy,
    behavior: RewardSpec,
    rng: np.random.Generator | None = None,
) -> list[AgentSpec]:
    if not agents:
        raise ValidationError("cannot mutate an empty population")
    n_cav = cav_count(policy.share, len(agents))
    if policy.selection is Selection.UNIFORM:
        if rng is None:
            raise ValidationError("uniform mutation needs a random stream")
        picked = set(int(i) for i in rng.choice(len(agents), size=n_cav, replace=False))
    else:
        order = sorted(range(len(agents)), key=lambda i: (agents[i].departure_time, agents[i].id))
        if policy.selection is Selection.LATEST:
            order.reverse()
        picked = set(order[:n_cav])
    return [
        replace(a, kind=CAV, behavior=behavior) if i in picked else a
        for i, a in enumerate(agents)
    ]
