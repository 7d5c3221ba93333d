"""Pure-Python point-queue kernel (fallback for the compiled ``_pqcore``).

Both kernels share one contract, all times in integer microseconds:

``run(dep_us, offsets, route_edges, fft_us, headway_us) -> exit_us``

* ``dep_us[i]``: departure of vehicle ``i``; vehicles are indexed in tie-break
  order (ascending agent id).
* ``route_edges[offsets[i]:offsets[i + 1]]``: edge indices of vehicle ``i``'s
  route.
* ``fft_us[e]`` / ``headway_us[e]``: free-flow traversal time and minimum exit
  spacing of edge ``e``.
* ``exit_us[j]``: time the vehicle leaves the edge at flat position ``j``.
"""

from __future__ import annotations

import heapq

import numpy as np


def run(dep_us, offsets, route_edges, fft_us, headway_us):
    dep = [int(x) for x in dep_us]
    off = [int(x) for x in offsets]
    redges = [int(x) for x in route_edges]
    fft = [int(x) for x in fft_us]
    hw = [int(x) for x in headway_us]
    n = len(dep)
    exit_us = [0] * len(redges)
    last_exit: list[int | None] = [None] * len(fft)
    pos = off[:-1]

    heap = []
    for i in range(n):
        if off[i] < off[i + 1]:
            heap.append((dep[i] + fft[redges[off[i]]], i))
    heapq.heapify(heap)

    while heap:
        t, i = heapq.heappop(heap)
        j = pos[i]
        e = redges[j]
        prev = last_exit[e]
        out = t if prev is None or prev + hw[e] <= t else prev + hw[e]
        last_exit[e] = out
        exit_us[j] = out
        j += 1
        pos[i] = j
        if j < off[i + 1]:
            heapq.heappush(heap, (out + fft[redges[j]], i))
    return np.asarray(exit_us, dtype=np.int64)
