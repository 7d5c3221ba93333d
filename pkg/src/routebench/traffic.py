"""One simulated day: deterministic FIFO point-queue network loading.

A vehicle entering edge ``e`` at time ``t`` may leave it at ``t + t_ff(e)``.
Each edge serves exits in FIFO order, no closer together than
``1 / capacity(e)`` seconds; a vehicle leaves at
``max(eligible, previous_exit + 1 / capacity)`` and enters its next edge at
the same instant. Junctions add no delay. All arithmetic happens in integer
microseconds, with ties ordered by (time, agent id).

The event loop lives in a compiled kernel (``_pqcore``) when available, with a
pure-Python twin (``_pqcore_py``) used otherwise. Set ``ROUTEBENCH_PURE_PYTHON=1``
to force the fallback.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import _pqcore_py
from .errors import InvalidChoice, SimulationHorizonExceeded
from .network import RoadNetwork

if os.environ.get("ROUTEBENCH_PURE_PYTHON"):
    _compiled = None
else:
    try:
        from . import _pqcore as _compiled
    except ImportError:  # extension not built
        _compiled = None

KERNELS = {"python": _pqcore_py}
if _compiled is not None:
    KERNELS["compiled"] = _compiled
BACKEND = "compiled" if _compiled is not None else "python"

DEFAULT_HORIZON_S = 6 * 3600.0
US = 1_000_000


def to_us(seconds: float) -> int:
    return int(round(seconds * US))


@dataclass(frozen=True)
class EpisodeResult:
    travel_time: dict[int, float]
    distance: dict[int, float]
    mean_speed: float
    arrived: dict[int, bool]


class TrafficModel:
    """Compiled form of a network for repeated episode simulation."""

    def __init__(self, net: RoadNetwork, horizon_s: float = DEFAULT_HORIZON_S, backend: str | None = None):
        self.net = net
        self.horizon_s = horizon_s
        self.horizon_us = to_us(horizon_s)
        self.edge_index = {eid: i for i, eid in enumerate(net.edges)}
        self.edge_ids = list(net.edges)
        self.fft_us = np.array([to_us(e.free_flow_time) for e in net.edges.values()], dtype=np.int64)
        self.headway_us = np.array([to_us(1.0 / e.capacity) for e in net.edges.values()], dtype=np.int64)
        self.kernel = KERNELS[backend or BACKEND]
        self._route_cache: dict[tuple[str, ...], tuple[int, ...]] = {}

    def _route_indices(self, edges: tuple[str, ...]) -> tuple[int, ...]:
        idx = self._route_cache.get(edges)
        if idx is None:
            idx = tuple(self.edge_index[e] for e in edges)
            self._route_cache[edges] = idx
        return idx

    def exit_times(self, routes: Sequence[tuple[str, ...]], departures_us: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
        """Raw kernel call. Returns ``(offsets, exit_us)``."""
        offsets = np.zeros(len(routes) + 1, dtype=np.int64)
        flat: list[int] = []
        for i, r in enumerate(routes):
            flat.extend(self._route_indices(r))
            offsets[i + 1] = len(flat)
        exits = self.kernel.run(
            np.asarray(departures_us, dtype=np.int64),
            offsets,
            np.asarray(flat, dtype=np.int64),
            self.fft_us,
            self.headway_us,
        )
        return offsets, exits

    def simulate(self, catalog, choices: Mapping[int, int], agents, trace_path=None) -> EpisodeResult:
        ordered = sorted(agents, key=lambda a: a.id)
        routes = []
        deps = []
        for a in ordered:
            rs = catalog[(a.origin, a.destination)]
            k = choices.get(a.id) if hasattr(choices, "get") else choices[a.id]
            if not isinstance(k, (int, np.integer)) or isinstance(k, bool) or not 0 <= k < len(rs.routes):
                raise InvalidChoice(a.id, k)
            routes.append(rs.routes[int(k)])
            deps.append(to_us(a.departure_time))
        offsets, exits = self.exit_times([r.edges for r in routes], deps)

        travel_time: dict[int, float] = {}
        distance: dict[int, float] = {}
        arrived: dict[int, bool] = {}
        late = None
        for i, a in enumerate(ordered):
            arr = int(exits[offsets[i + 1] - 1])
            if arr > self.horizon_us and late is None:
                late = a.id
            travel_time[a.id] = (arr - deps[i]) / US
            distance[a.id] = routes[i].length
            arrived[a.id] = arr <= self.horizon_us
        if trace_path is not None:
            self._write_trace(trace_path, ordered, routes, deps, offsets, exits)
        if late is not None:
            raise SimulationHorizonExceeded(self.horizon_s, late)
        total_time = math.fsum(travel_time.values())
        total_dist = math.fsum(distance.values())
        mean_speed = total_dist / total_time if total_time > 0 else 0.0
        return EpisodeResult(travel_time, distance, mean_speed, arrived)

    def _write_trace(self, path, ordered, routes, deps, offsets, exits):
        rows = []
        for i, a in enumerate(ordered):
            t_in = deps[i]
            for j, eid in enumerate(routes[i].edges):
                t_out = int(exits[offsets[i] + j])
                rows.append((t_in, a.id, eid, "enter"))
                rows.append((t_out, a.id, eid, "exit"))
                t_in = t_out
        rows.sort(key=lambda r: (r[0], r[1], r[2], r[3] == "enter"))
        with open(Path(path), "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(("time_us", "agent", "edge", "event_type"))
            w.writerows(rows)


def simulate_episode(
    net: RoadNetwork,
    catalog,
    choices: Mapping[int, int],
    agents,
    horizon_s: float = DEFAULT_HORIZON_S,
    backend: str | None = None,
    trace_path=None,
) -> EpisodeResult:
    return TrafficModel(net, horizon_s, backend).simulate(catalog, choices, agents, trace_path)
