"""K-route action spaces sampled with a Dial-style logit walk.

Each origin-destination pair gets ``k`` distinct simple paths. Walks only use
*efficient* edges, i.e. edges that move strictly closer (in free-flow time) to
the destination, so every walk terminates and never revisits a node. Among the
efficient edges leaving a node, an edge ``u -> v`` is picked with weight
``exp(-beta * (t_e + phi(v) - phi(u)))`` where ``phi`` is the shortest
free-flow time to the destination. The bracketed term is the extra time the
edge costs over the best continuation, so ``beta`` controls how strongly walks
concentrate on the shortest path.
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import InsufficientRoutes, Unreachable, ValidationError
from .network import RoadNetwork
from .seeding import derive_stream

ROUTES_HEADER = ("origin", "destination", "route_index", "edge_sequence", "free_flow_time_s", "length_m")


@dataclass(frozen=True)
class Route:
    edges: tuple[str, ...]
    origin: str
    destination: str
    free_flow_time: float
    length: float

    @classmethod
    def from_edges(cls, net: RoadNetwork, edges: Sequence[str]) -> "Route":
        es = [net.edge(e) for e in edges]
        return cls(
            edges=tuple(edges),
            origin=es[0].source,
            destination=es[-1].target,
            free_flow_time=math.fsum(e.free_flow_time for e in es),
            length=math.fsum(e.length for e in es),
        )

    def nodes(self, net: RoadNetwork) -> list[str]:
        return [self.origin] + [net.edges[e].target for e in self.edges]


@dataclass(frozen=True)
class RouteSet:
    od: tuple[str, str]
    routes: tuple[Route, ...]

    def __len__(self) -> int:
        return len(self.routes)

    def __getitem__(self, index: int) -> Route:
        return self.routes[index]

    @property
    def free_flow_times(self) -> list[float]:
        return [r.free_flow_time for r in self.routes]


@dataclass(frozen=True)
class RouteGenParams:
    k: int = 4
    logit_beta: float = 0.03
    max_samples: int | None = None
    rng_stream: str = "routegen"

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError("k must be >= 1")
        if self.logit_beta < 0:
            raise ValidationError("logit_beta must be >= 0")
        if self.max_samples is not None and self.max_samples < self.k:
            raise ValidationError("max_samples must be >= k")

    @property
    def sample_budget(self) -> int:
        return self.max_samples if self.max_samples is not None else 50 * self.k


def potentials(net: RoadNetwork, destination: str) -> tuple[dict[str, float], dict[str, str]]:
    """Shortest free-flow time from every node to *destination*.

    Returns ``(phi, next_edge)``; unreachable nodes are absent from both.
    ``next_edge[u]`` is the first edge of a shortest path from ``u``.
    """
    net.check_node(destination)
    phi = {destination: 0.0}
    next_edge: dict[str, str] = {}
    done = set()
    heap = [(0.0, destination)]
    while heap:
        d, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        for eid in net.incoming[v]:
            e = net.edges[eid]
            cand = d + e.free_flow_time
            u = e.source
            old = phi.get(u)
            # tie rule keeps the lexicographically smallest first edge
            if old is None or cand < old or (cand == old and u not in done and eid < next_edge[u]):
                phi[u] = cand
                next_edge[u] = eid
                heapq.heappush(heap, (cand, u))
    return phi, next_edge


def efficient_edges(net: RoadNetwork, phi: Mapping[str, float], node: str) -> list[str]:
    p = phi[node]
    return [
        eid
        for eid in net.adjacency[node]
        if net.edges[eid].target in phi and phi[net.edges[eid].target] < p
    ]


def count_efficient_paths(net: RoadNetwork, phi: Mapping[str, float], origin: str, destination: str) -> int:
    """Number of distinct origin->destination walks over efficient edges."""
    order = sorted(phi, key=lambda n: phi[n])  # destination first
    count = {destination: 1}
    for node in order:
        if node == destination:
            continue
        count[node] = sum(count[net.edges[e].target] for e in efficient_edges(net, phi, node))
    return count.get(origin, 0)


def sample_walk(net: RoadNetwork, phi, origin: str, destination: str, beta: float, rng: np.random.Generator) -> tuple[str, ...]:
    """One logit walk over efficient edges; *phi* comes from :func:`potentials`."""
    path = []
    u = origin
    limit = len(net.nodes)
    while u != destination:
        cands = efficient_edges(net, phi, u)
        excess = np.array(
            [net.edges[e].free_flow_time + phi[net.edges[e].target] - phi[u] for e in cands]
        )
        w = np.exp(-beta * (excess - excess.min()))
        cdf = np.cumsum(w)
        i = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        e = cands[min(i, len(cands) - 1)]
        path.append(e)
        u = net.edges[e].target
        assert len(path) <= limit, "efficient walk exceeded node count"
    return tuple(path)


def generate_routes(
    net: RoadNetwork,
    origin: str,
    destination: str,
    params: RouteGenParams,
    rng: np.random.Generator,
    *,
    return_draws: bool = False,
):
    """Sample ``params.k`` distinct routes from *origin* to *destination*.

    The shortest path is always included. With ``return_draws=True`` the raw
    sampled walks (before deduplication) are returned alongside the set.
    """
    net.check_node(origin)
    net.check_node(destination)
    if origin == destination:
        raise ValidationError("origin and destination must differ")
    phi, next_edge = potentials(net, destination)
    if origin not in phi:
        raise Unreachable(origin, destination)

    available = count_efficient_paths(net, phi, origin, destination)
    if available < params.k:
        raise InsufficientRoutes(available, params.k, (origin, destination))

    shortest = []
    u = origin
    while u != destination:
        shortest.append(next_edge[u])
        u = net.edges[next_edge[u]].target
    found = {tuple(shortest): None}
    draws = []
    for _ in range(params.sample_budget):
        if len(found) >= params.k and not return_draws:
            break
        path = sample_walk(net, phi, origin, destination, params.logit_beta, rng)
        draws.append(path)
        if len(found) < params.k:
            found.setdefault(path, None)
    if len(found) < params.k:
        raise InsufficientRoutes(len(found), params.k, (origin, destination))

    routes = sorted(
        (Route.from_edges(net, p) for p in found),
        key=lambda r: (r.free_flow_time, r.edges),
    )
    rs = RouteSet((origin, destination), tuple(routes))
    return (rs, draws) if return_draws else rs


def route_catalog(net: RoadNetwork, agents, params: RouteGenParams, seed: int) -> dict[tuple[str, str], RouteSet]:
    """One :class:`RouteSet` per distinct OD among *agents*.

    Each OD samples from its own stream derived from ``(seed, params.rng_stream,
    origin, destination)`` so the catalog does not depend on agent order.
    """
    catalog: dict[tuple[str, str], RouteSet] = {}
    for a in agents:
        od = (a.origin, a.destination)
        if od in catalog:
            continue
        rng = derive_stream(seed, params.rng_stream, od[0], od[1])
        try:
            catalog[od] = generate_routes(net, od[0], od[1], params, rng)
        except InsufficientRoutes as exc:
            raise InsufficientRoutes(exc.found, exc.requested, od) from None
    return catalog


def write_routes_csv(catalog: Mapping[tuple[str, str], RouteSet], path) -> None:
    with open(Path(path), "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(ROUTES_HEADER)
        for (o, d), rs in catalog.items():
            for i, r in enumerate(rs.routes):
                w.writerow([o, d, i, "|".join(r.edges), repr(r.free_flow_time), repr(r.length)])
