"""The four-phase pipeline: human learning, mutation, CAV training, testing.

Within every episode agents act one at a time in ascending
``(departure_time, agent id)`` order, so a CAV's observation covers exactly
the agents that acted before it that day.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from . import baselines
from .baselines import BaselineKind
from .demand import AgentSpec, MutationPolicy, Selection, check_departure_window, mutate
from .errors import ConfigError, ExperimentExists, ValidationError
from .human import HumanMemory, HumanParams, human_act, human_learn, init_memory
from .marl import (
    AlgConfig,
    ObservationTracker,
    RewardSpec,
    make_policy,
    reward,
    reward_spec,
    select_action,
    update,
)
from .network import RoadNetwork
from .routegen import RouteGenParams, route_catalog, write_routes_csv
from .seeding import derive_stream
from .traffic import DEFAULT_HORIZON_S, TrafficModel

log = logging.getLogger(__name__)

PHASE_HUMAN = "human"
PHASE_TRAIN = "train"
PHASE_TEST = "test"

EPISODE_HEADER = ("episode", "phase", "agent_id", "kind", "action", "travel_time_s", "distance_m")
STATS_HEADER = ("episode", "phase", "mean_speed_mps", "total_distance_m", "total_travel_time_s")


@dataclass(frozen=True)
class TaskConfig:
    human_days: int = 200
    training_episodes: int = 6000
    test_episodes: int = 100
    cav_share: float = 0.4
    reward_spec: RewardSpec = field(default_factory=RewardSpec)
    human_params: HumanParams = field(default_factory=HumanParams)
    humans_adapt_after_mutation: bool = False
    t_pre_window: int = 50
    mutation_selection: Selection = Selection.UNIFORM

    def __post_init__(self):
        for name in ("human_days", "training_episodes", "test_episodes", "t_pre_window"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise ConfigError(f"{name} must be a non-negative integer, got {v!r}")
        if not 0.0 <= self.cav_share <= 1.0:
            raise ConfigError(f"cav_share must lie in [0, 1], got {self.cav_share!r}")
        if self.t_pre_window > self.human_days:
            raise ConfigError("t_pre_window cannot exceed human_days")
        object.__setattr__(self, "mutation_selection", Selection(self.mutation_selection))

    @classmethod
    def from_dict(cls, d: Mapping) -> "TaskConfig":
        human_days = d.get("human_days", 200)
        return cls(
            human_days=human_days,
            training_episodes=d.get("training_episodes", 6000),
            test_episodes=d.get("test_episodes", 100),
            cav_share=float(d.get("cav_share", 0.4)),
            reward_spec=reward_spec(d.get("behavior", "selfish")),
            human_params=HumanParams.from_dict(d.get("human_params", {})),
            humans_adapt_after_mutation=bool(d.get("humans_adapt_after_mutation", False)),
            t_pre_window=d.get("t_pre_window", min(50, human_days) if isinstance(human_days, int) else 50),
            mutation_selection=d.get("mutation_selection", "uniform"),
        )

    def to_dict(self) -> dict:
        return {
            "human_days": self.human_days,
            "training_episodes": self.training_episodes,
            "test_episodes": self.test_episodes,
            "cav_share": self.cav_share,
            "behavior": self.reward_spec.to_dict(),
            "human_params": self.human_params.to_dict(),
            "humans_adapt_after_mutation": self.humans_adapt_after_mutation,
            "t_pre_window": self.t_pre_window,
            "mutation_selection": self.mutation_selection.value,
        }


@dataclass(frozen=True)
class EnvConfig:
    number_of_paths: int = 4
    logit_beta: float = 0.03
    max_samples: int | None = None
    horizon_s: float = DEFAULT_HORIZON_S
    departure_window_s: float = 1800.0
    dump_routes: bool = True
    dump_events: bool = False
    traffic_backend: str | None = None

    def __post_init__(self):
        if self.horizon_s <= 0 or self.departure_window_s < 0:
            raise ConfigError("horizon_s must be positive and departure_window_s non-negative")
        if self.traffic_backend not in (None, "compiled", "python"):
            raise ConfigError(f"unknown traffic_backend {self.traffic_backend!r}")

    @property
    def routegen(self) -> RouteGenParams:
        return RouteGenParams(k=self.number_of_paths, logit_beta=self.logit_beta, max_samples=self.max_samples)

    @classmethod
    def from_dict(cls, d: Mapping) -> "EnvConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown env config keys {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class RunRecord:
    """Per-episode, per-agent history of one run."""

    rows: list[tuple] = field(default_factory=list)
    episode_stats: list[tuple] = field(default_factory=list)

    def phases(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for _, phase, *_ in self.episode_stats:
            out[phase] = out.get(phase, 0) + 1
        return out

    def write(self, out_dir) -> None:
        out_dir = Path(out_dir)
        with open(out_dir / "episodes.csv", "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(EPISODE_HEADER)
            for ep, phase, aid, kind, action, tt, dist in self.rows:
                w.writerow((ep, phase, aid, kind, action, repr(tt), repr(dist)))
        with open(out_dir / "episode_stats.csv", "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(STATS_HEADER)
            for ep, phase, speed, dist, tt in self.episode_stats:
                w.writerow((ep, phase, repr(speed), repr(dist), repr(tt)))

    @classmethod
    def read(cls, out_dir) -> "RunRecord":
        out_dir = Path(out_dir)
        rec = cls()
        with open(out_dir / "episodes.csv", newline="", encoding="utf-8") as f:
            r = csv.reader(f)
            next(r)
            for ep, phase, aid, kind, action, tt, dist in r:
                rec.rows.append((int(ep), phase, int(aid), kind, int(action), float(tt), float(dist)))
        with open(out_dir / "episode_stats.csv", newline="", encoding="utf-8") as f:
            r = csv.reader(f)
            next(r)
            for ep, phase, speed, dist, tt in r:
                rec.episode_stats.append((int(ep), phase, float(speed), float(dist), float(tt)))
        return rec


@dataclass
class RunResult:
    record: RunRecord
    agents: list[AgentSpec]
    catalog: dict
    memories_at_mutation: dict[int, HumanMemory]
    memories_final: dict[int, HumanMemory]
    policies: dict
    kpis: object = None


def _ordered(agents: Sequence[AgentSpec]) -> list[AgentSpec]:
    return sorted(agents, key=lambda a: (a.departure_time, a.id))


class Experiment:
    """Stateful runner; :func:`run_experiment` is the usual entry point."""

    def __init__(
        self,
        net: RoadNetwork,
        agents: Sequence[AgentSpec],
        task: TaskConfig,
        env_cfg: EnvConfig,
        alg_cfg: AlgConfig | None,
        env_seed: int = 42,
        train_seed: int = 42,
        baseline: str | BaselineKind | None = None,
        catalog: Mapping | None = None,
    ):
        if not agents:
            raise ValidationError("no agents")
        if baseline is None and alg_cfg is None:
            raise ConfigError("either an algorithm config or a baseline model is required")
        check_departure_window(agents, env_cfg.departure_window_s)
        self.net = net
        self.task = task
        self.env_cfg = env_cfg
        self.alg_cfg = alg_cfg
        self.env_seed = env_seed
        self.train_seed = train_seed
        self.baseline = BaselineKind(baseline) if baseline is not None else None
        self.agents = [a for a in agents]
        self.catalog = dict(catalog) if catalog is not None else route_catalog(
            net, self.agents, env_cfg.routegen, env_seed
        )
        self.model = TrafficModel(net, env_cfg.horizon_s, env_cfg.traffic_backend)
        self.record = RunRecord()
        self.episode = 0
        hp = task.human_params
        self.memories: dict[int, HumanMemory] = {
            a.id: init_memory(
                self.catalog[a.od],
                hp,
                derive_stream(env_seed, "human", a.id, "init") if hp.needs_init_noise else None,
            )
            for a in self.agents
        }
        self.policies: dict = {}
        self.explore_rngs: dict = {}
        self.random_rngs: dict = {}
        self.memories_at_mutation: dict[int, HumanMemory] = {}

    # -- helpers -------------------------------------------------------------

    def _human_rng(self, agent_id: int):
        if self.task.human_params.stochastic:
            return derive_stream(self.env_seed, "human", agent_id, self.episode)
        return None

    def _simulate(self, choices, phase, order, trace_path=None):
        result = self.model.simulate(self.catalog, choices, self.agents, trace_path)
        ep = self.episode
        for a in order:
            self.record.rows.append(
                (ep, phase, a.id, a.kind, choices[a.id], result.travel_time[a.id], result.distance[a.id])
            )
        self.record.episode_stats.append(
            (
                ep,
                phase,
                result.mean_speed,
                math.fsum(result.distance.values()),
                math.fsum(result.travel_time.values()),
            )
        )
        return result

    # -- phases --------------------------------------------------------------

    def run_human_phase(self) -> None:
        hp = self.task.human_params
        order = _ordered(self.agents)
        for _ in range(self.task.human_days):
            choices = {a.id: human_act(self.memories[a.id], hp, self._human_rng(a.id)) for a in order}
            result = self._simulate(choices, PHASE_HUMAN, order)
            for a in order:
                human_learn(self.memories[a.id], choices[a.id], result.travel_time[a.id], hp)
            self.episode += 1

    def mutate(self) -> None:
        policy = MutationPolicy(self.task.cav_share, self.task.mutation_selection)
        self.agents = mutate(
            self.agents, policy, self.task.reward_spec, derive_stream(self.env_seed, "mutation")
        )
        self.memories_at_mutation = {aid: m.snapshot() for aid, m in self.memories.items()}
        for a in self.agents:
            if not a.is_cav:
                continue
            if self.baseline is BaselineKind.HUMAN:
                continue  # stand-in keeps its frozen human memory
            del self.memories[a.id]
            if self.baseline is None:
                k = len(self.catalog[a.od].routes)
                self.policies[a.id] = make_policy(self.alg_cfg, k, self.task.training_episodes)
                self.explore_rngs[a.id] = derive_stream(self.train_seed, "exploration", a.id)
            elif self.baseline is BaselineKind.RANDOM:
                self.random_rngs[a.id] = derive_stream(self.env_seed, "random_baseline", a.id)

    def _cav_act(self, a: AgentSpec, tracker, mode: str):
        rs = self.catalog[a.od]
        if self.baseline is None:
            obs = tracker.observe(rs)
            return select_action(self.policies[a.id], obs, self.explore_rngs[a.id], mode), obs
        if self.baseline is BaselineKind.AON:
            return baselines.aon_act(rs), None
        if self.baseline is BaselineKind.RANDOM:
            return baselines.random_act(len(rs.routes), self.random_rngs[a.id]), None
        return baselines.human_stand_in_act(self.memories[a.id], self.task.human_params, self._human_rng(a.id)), None

    def run_cav_episode(self, phase: str, trace_path=None) -> None:
        training = phase == PHASE_TRAIN
        mode = "train" if training else "test"
        hp = self.task.human_params
        order = _ordered(self.agents)
        use_tracker = self.baseline is None
        tracker = ObservationTracker() if use_tracker else None
        choices: dict[int, int] = {}
        observations = {}
        for a in order:
            if a.is_cav:
                action, obs = self._cav_act(a, tracker, mode)
                observations[a.id] = obs
            else:
                action = human_act(self.memories[a.id], hp, self._human_rng(a.id))
            choices[a.id] = action
            if use_tracker:
                tracker.record(a.id, self.catalog[a.od].routes[action])
        result = self._simulate(choices, phase, order, trace_path)

        if training and self.baseline is None and self.policies:
            fleet = {a.id for a in self.agents if a.is_cav}
            humans = {a.id for a in self.agents if not a.is_cav}
            for a in order:
                if a.is_cav:
                    r = reward(a.behavior, result, a.id, fleet, humans)
                    update(self.policies[a.id], observations[a.id], choices[a.id], r)
        if training and self.task.humans_adapt_after_mutation:
            for a in order:
                if not a.is_cav:
                    human_learn(self.memories[a.id], choices[a.id], result.travel_time[a.id], hp)
        self.episode += 1

    def run(self, trace_path=None) -> RunResult:
        self.run_human_phase()
        self.mutate()
        for _ in range(self.task.training_episodes):
            self.run_cav_episode(PHASE_TRAIN)
        for i in range(self.task.test_episodes):
            last = i == self.task.test_episodes - 1
            self.run_cav_episode(PHASE_TEST, trace_path if last else None)
        return RunResult(
            record=self.record,
            agents=self.agents,
            catalog=self.catalog,
            memories_at_mutation=self.memories_at_mutation,
            memories_final={aid: m.snapshot() for aid, m in self.memories.items()},
            policies=self.policies,
        )


def run_experiment(
    net: RoadNetwork,
    agents: Sequence[AgentSpec],
    task: TaskConfig,
    env_cfg: EnvConfig,
    alg_cfg: AlgConfig | None,
    env_seed: int = 42,
    train_seed: int = 42,
    *,
    baseline: str | BaselineKind | None = None,
    out_dir=None,
    resolved_config: Mapping | None = None,
    catalog: Mapping | None = None,
) -> RunResult:
    """Run the full pipeline and, if *out_dir* is given, write its artifacts.

    *out_dir* must not exist yet; an existing directory is never overwritten.
    """
    from .metrics import compute_kpis, write_kpis
    from .series import emit_series

    if out_dir is not None:
        out_dir = Path(out_dir)
        if out_dir.exists():
            raise ExperimentExists(out_dir)
    exp = Experiment(net, agents, task, env_cfg, alg_cfg, env_seed, train_seed, baseline, catalog)
    trace_path = None
    if out_dir is not None:
        out_dir.mkdir(parents=True)
        if env_cfg.dump_events and task.test_episodes > 0:
            trace_path = out_dir / "events.csv"
    log.info("running %d human days, %d training, %d test episodes", task.human_days,
             task.training_episodes, task.test_episodes)
    result = exp.run(trace_path)
    result.kpis = compute_kpis(result.record, task) if task.t_pre_window > 0 else None

    if out_dir is not None:
        config = dict(resolved_config) if resolved_config is not None else {
            "task": task.to_dict(),
            "env": env_cfg.to_dict(),
            "algorithm": alg_cfg.to_dict() if alg_cfg is not None else None,
            "baseline": exp.baseline.value if exp.baseline is not None else None,
            "env_seed": env_seed,
            "train_seed": train_seed,
        }
        config["n_agents"] = len(result.agents)
        config["n_cavs"] = sum(a.is_cav for a in result.agents)
        config["cav_ids"] = sorted(a.id for a in result.agents if a.is_cav)
        with open(out_dir / "exp_config.json", "w", encoding="utf-8") as f:
            json.dump(config, f, indent=2, sort_keys=True)
            f.write("\n")
        result.record.write(out_dir)
        if env_cfg.dump_routes:
            write_routes_csv(result.catalog, out_dir / "routes.csv")
        if result.kpis is not None:
            write_kpis(result.kpis, out_dir)
        emit_series(result.record, out_dir, t_pre=result.kpis.t_pre if result.kpis is not None else None)
    return result
