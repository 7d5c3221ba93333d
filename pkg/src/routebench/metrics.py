"""Run-level KPIs and the cross-run win rate.

Times are stored in seconds and reported in minutes. For an agent ``i``,
``t_pre_i`` is its mean travel time over the last ``t_pre_window`` human-only
days; the cost of training is ``sum_i sum_train (t_i - t_pre_i) / (|N| |train|)``,
restricted to a group (agents and normaliser) for ``c_hdv`` and ``c_cav``.
Speed change is absolute (m/s), mileage change is relative to the pre window.
"""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import PhaseMissing

UNITS = {
    "t_pre": "min",
    "t_train": "min",
    "t_test": "min",
    "t_cav": "min",
    "t_hdv": "min",
    "c_all": "min",
    "c_hdv": "min",
    "c_cav": "min",
    "delta_v": "m/s",
    "delta_l": "fraction",
}
KPI_FIELDS = tuple(UNITS)


@dataclass(frozen=True)
class KpiReport:
    t_pre: float | None = None
    t_train: float | None = None
    t_test: float | None = None
    t_cav: float | None = None
    t_hdv: float | None = None
    c_all: float | None = None
    c_hdv: float | None = None
    c_cav: float | None = None
    delta_v: float | None = None
    delta_l: float | None = None
    episodes_counted: dict = field(default_factory=dict)

    @property
    def cav_wins(self) -> bool:
        return self.t_cav is not None and self.t_pre is not None and self.t_cav < self.t_pre

    def to_flat(self) -> dict:
        out: dict = {}
        for name in KPI_FIELDS:
            out[name] = getattr(self, name)
            out[f"{name}_units"] = UNITS[name]
        for phase in ("pre_window", "train", "test"):
            out[f"episodes_{phase}"] = self.episodes_counted.get(phase, 0)
        out["cav_wins"] = self.cav_wins
        return out

    @classmethod
    def from_flat(cls, d: dict) -> "KpiReport":
        return cls(
            **{name: d.get(name) for name in KPI_FIELDS},
            episodes_counted={p: d.get(f"episodes_{p}", 0) for p in ("pre_window", "train", "test")},
        )


def _mean(values) -> float | None:
    values = list(values)
    return math.fsum(values) / len(values) if values else None


def _minutes(x: float | None) -> float | None:
    return None if x is None else x / 60.0


def compute_kpis(record, task) -> KpiReport:
    window = task.t_pre_window
    human_eps = sorted({s[0] for s in record.episode_stats if s[1] == "human"})
    if window <= 0 or len(human_eps) < window:
        raise PhaseMissing("human", f"need {window} pre-mutation episodes, have {len(human_eps)}")
    pre_eps = set(human_eps[-window:])
    phases = record.phases()
    for phase, expected in (("train", task.training_episodes), ("test", task.test_episodes)):
        if phases.get(phase, 0) != expected:
            raise PhaseMissing(phase, f"expected {expected} episodes, found {phases.get(phase, 0)}")

    pre_times: dict[int, list[float]] = defaultdict(list)
    train_times: dict[int, list[float]] = defaultdict(list)
    test_by_kind: dict[str, list[float]] = defaultdict(list)
    test_all: list[float] = []
    kind_of: dict[int, str] = {}
    for ep, phase, aid, kind, _action, tt, _dist in record.rows:
        if phase == "human":
            if ep in pre_eps:
                pre_times[aid].append(tt)
            continue
        kind_of[aid] = kind
        if phase == "train":
            train_times[aid].append(tt)
        elif phase == "test":
            test_all.append(tt)
            test_by_kind[kind].append(tt)

    t_pre_i = {aid: math.fsum(v) / len(v) for aid, v in pre_times.items()}
    n_train = phases.get("train", 0)

    def cost(ids: Sequence[int]) -> float | None:
        if not ids or n_train == 0:
            return None
        total = math.fsum(math.fsum(train_times[i]) - n_train * t_pre_i[i] for i in ids)
        return total / (len(ids) * n_train)

    agents = sorted(t_pre_i)
    cavs = [i for i in agents if kind_of.get(i) == "cav"]
    hdvs = [i for i in agents if kind_of.get(i, "human") == "human"]

    pre_stats = [s for s in record.episode_stats if s[0] in pre_eps]
    test_stats = [s for s in record.episode_stats if s[1] == "test"]
    delta_v = delta_l = None
    if test_stats:
        delta_v = _mean(s[2] for s in test_stats) - _mean(s[2] for s in pre_stats)
        pre_mileage = _mean(s[3] for s in pre_stats)
        delta_l = (_mean(s[3] for s in test_stats) - pre_mileage) / pre_mileage

    all_train = [t for v in train_times.values() for t in v]
    return KpiReport(
        t_pre=_minutes(_mean(t_pre_i[i] for i in agents)),
        t_train=_minutes(_mean(all_train)),
        t_test=_minutes(_mean(test_all)),
        t_cav=_minutes(_mean(test_by_kind.get("cav", []))),
        t_hdv=_minutes(_mean(test_by_kind.get("human", []))),
        c_all=_minutes(cost(agents if kind_of else [])),
        c_hdv=_minutes(cost(hdvs if kind_of else [])),
        c_cav=_minutes(cost(cavs)),
        delta_v=delta_v,
        delta_l=delta_l,
        episodes_counted={"pre_window": window, "train": n_train, "test": phases.get("test", 0)},
    )


def win_rate(reports: Iterable[KpiReport]) -> float:
    reports = list(reports)
    if not reports:
        raise ValueError("win rate needs at least one run")
    return sum(r.cav_wins for r in reports) / len(reports)


def write_kpis(report: KpiReport, out_dir) -> None:
    out_dir = Path(out_dir)
    flat = report.to_flat()
    with open(out_dir / "kpis.json", "w", encoding="utf-8") as f:
        json.dump(flat, f, indent=2)
        f.write("\n")
    with open(out_dir / "kpis.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(list(flat))
        w.writerow(["" if v is None else v for v in flat.values()])


def read_kpis(out_dir) -> KpiReport:
    with open(Path(out_dir) / "kpis.json", encoding="utf-8") as f:
        return KpiReport.from_flat(json.load(f))
