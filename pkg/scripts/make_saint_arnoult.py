"""Generate the bundled ``saint_arnoult`` fixture.

A synthetic small town sized like the St. Arnoult instance: 222 trips over
215 distinct origin-destination pairs, departures within a half-hour window.
The road graph is a jittered grid with two arterials, some one-way streets
and a small centre that attracts most trips. Only OD pairs with plenty of
distinct efficient routes are kept, so ``k = 4`` route generation succeeds
for any env seed.

Run from the repository root::

    python scripts/make_saint_arnoult.py
"""

from __future__ import annotations

import math
from pathlib import Path
from statistics import median

import numpy as np

from routebench.demand import AgentSpec, write_agents
from routebench.errors import InsufficientRoutes
from routebench.network import Edge, Node, RoadNetwork, write_network
from routebench.routegen import RouteGenParams, count_efficient_paths, generate_routes, potentials
from routebench.seeding import derive_stream

OUT = Path(__file__).resolve().parents[1] / "src" / "routebench" / "data" / "networks" / "saint_arnoult"
COLS, ROWS = 12, 10
SPACING = 220.0
N_OD, N_TRIPS = 215, 222
WINDOW_S = 1800


def build_network(rng: np.random.Generator) -> RoadNetwork:
    nodes = {}
    for r in range(ROWS):
        for c in range(COLS):
            nid = f"{r:02d}{c:02d}"
            x = c * SPACING + rng.uniform(-35, 35)
            y = r * SPACING + rng.uniform(-35, 35)
            nodes[nid] = Node(nid, round(x, 1), round(y, 1))

    arterial_row, arterial_col = 4, 6
    edges = []

    def add(a: str, b: str, arterial: bool):
        na, nb = nodes[a], nodes[b]
        straight = math.hypot(nb.x - na.x, nb.y - na.y)
        length = round(straight * (1.0 + rng.uniform(0.0, 0.12)), 1)
        speed = 13.89 if arterial else 8.33
        # effective junction throughput; a point queue has no spillback, so
        # these are well below link saturation flows
        capacity = 0.06 if arterial else 0.025
        edges.append(Edge(f"{a}_{b}", a, b, length, speed, capacity))

    for r in range(ROWS):
        for c in range(COLS):
            a = f"{r:02d}{c:02d}"
            for dr, dc in ((0, 1), (1, 0)):
                rr, cc = r + dr, c + dc
                if rr >= ROWS or cc >= COLS:
                    continue
                b = f"{rr:02d}{cc:02d}"
                arterial = (dr == 0 and r == arterial_row) or (dc == 0 and c == arterial_col)
                u = rng.random()
                # ~10% one-way streets, never on arterials
                if arterial or u > 0.10:
                    add(a, b, arterial)
                    add(b, a, arterial)
                elif u < 0.05:
                    add(a, b, arterial)
                else:
                    add(b, a, arterial)
    return RoadNetwork.build(nodes.values(), edges)


def main() -> None:
    rng = np.random.default_rng(20250501)
    net = build_network(rng)
    node_ids = list(net.nodes)
    centre = ["0405", "0406", "0505", "0506", "0407"]

    # first pass: typical OD free-flow time sets the logit scale
    sample = []
    for _ in range(200):
        o, d = rng.choice(node_ids, 2, replace=False)
        phi, _ = potentials(net, str(d))
        if str(o) in phi:
            sample.append(phi[str(o)])
    typical = median(sample)
    # a 20% detour should be picked with probability ~0.25 against the best path
    beta = float(f"{math.log(3.0) / (0.2 * typical):.4g}")
    params = RouteGenParams(k=4, logit_beta=beta, max_samples=50)
    print(f"median OD free-flow time {typical:.1f} s -> logit_beta {beta}")

    ods: list[tuple[str, str]] = []
    seen = set()
    while len(ods) < N_OD:
        o = str(rng.choice(node_ids))
        d = str(rng.choice(centre)) if rng.random() < 0.7 else str(rng.choice(node_ids))
        if o == d or (o, d) in seen:
            continue
        phi, _ = potentials(net, d)
        if o not in phi or count_efficient_paths(net, phi, o, d) < 8:
            continue
        try:
            for s in range(5):
                generate_routes(net, o, d, params, derive_stream(s, "fixture-check", o, d))
        except InsufficientRoutes:
            continue
        seen.add((o, d))
        ods.append((o, d))

    trips = ods + [ods[int(i)] for i in rng.choice(N_OD, N_TRIPS - N_OD, replace=False)]
    starts = np.clip(rng.triangular(0, 420, 1200, size=N_TRIPS), 0, WINDOW_S - 1).astype(int)
    ids = rng.permutation(N_TRIPS)
    agents = sorted(
        (AgentSpec(int(ids[i]), o, d, float(starts[i])) for i, (o, d) in enumerate(trips)),
        key=lambda a: a.id,
    )

    OUT.mkdir(parents=True, exist_ok=True)
    write_network(net, OUT)
    write_agents(agents, OUT / "agents.csv")
    print(f"{len(net.nodes)} nodes, {len(net.edges)} edges, {len(agents)} trips, {len(set(trips))} ODs -> {OUT}")


if __name__ == "__main__":
    main()
