"""Compare the compiled and pure-Python point-queue kernels.

    python benchmarks/bench_traffic.py [--episodes 200] [--scale 1]

Times the raw kernel and a full ``TrafficModel.simulate`` call on the bundled
St. Arnoult fixture. ``--scale N`` replicates the demand N times (ids shifted)
to show how the kernels behave on larger instances.
"""

from __future__ import annotations

import argparse
import time
from dataclasses import replace

import numpy as np

from routebench.cli import DATA_ROOT
from routebench.demand import load_agents
from routebench.network import load_network
from routebench.routegen import RouteGenParams, route_catalog
from routebench.seeding import derive_stream
from routebench.traffic import KERNELS, TrafficModel, to_us


def timed(fn, repeats: int) -> float:
    fn()  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--episodes", type=int, default=200)
    parser.add_argument("--scale", type=int, default=1)
    args = parser.parse_args()

    net_dir = DATA_ROOT / "networks" / "saint_arnoult"
    net = load_network(net_dir)
    base = load_agents(net_dir / "agents.csv")
    agents = [replace(a, id=a.id + k * len(base)) for k in range(args.scale) for a in base]
    catalog = route_catalog(net, agents, RouteGenParams(k=4, logit_beta=0.0339), 42)
    rng = derive_stream(0, "bench")
    choices = {a.id: int(rng.integers(4)) for a in agents}

    print(f"{len(agents)} vehicles, {len(net.edges)} edges, {args.episodes} episodes per measurement")
    if "compiled" not in KERNELS:
        print("compiled kernel not built; only the Python kernel is available")
    results = {}
    for backend in sorted(KERNELS):
        model = TrafficModel(net, horizon_s=24 * 3600, backend=backend)
        ordered = sorted(agents, key=lambda a: a.id)
        routes = [catalog[a.od].routes[choices[a.id]].edges for a in ordered]
        deps = np.array([to_us(a.departure_time) for a in ordered], dtype=np.int64)
        offsets, _ = model.exit_times(routes, deps)
        flat = np.array([model.edge_index[e] for r in routes for e in r], dtype=np.int64)

        raw = timed(lambda: model.kernel.run(deps, offsets, flat, model.fft_us, model.headway_us), args.episodes)
        full = timed(lambda: model.simulate(catalog, choices, agents), args.episodes)
        results[backend] = model.kernel.run(deps, offsets, flat, model.fft_us, model.headway_us)
        print(f"{backend:>8}: kernel {raw * 1e3:8.3f} ms   simulate {full * 1e3:8.3f} ms")

    if len(results) == 2:
        same = np.array_equal(results["compiled"], results["python"])
        print(f"kernels agree bit-for-bit: {same}")


if __name__ == "__main__":
    main()
