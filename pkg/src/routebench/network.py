"""Road graph loading and queries."""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping

from .errors import (
    DanglingEndpoint,
    DuplicateEdge,
    DuplicateNode,
    MissingFile,
    NonPositiveAttribute,
    ParseError,
    SelfLoop,
    UnknownEdge,
    UnknownNode,
)

NODE_HEADER = ("id", "x", "y")
EDGE_HEADER = ("id", "from", "to", "length_m", "speed_mps", "capacity_vps")


@dataclass(frozen=True)
class Node:
    id: str
    x: float = 0.0
    y: float = 0.0


@dataclass(frozen=True)
class Edge:
    id: str
    source: str
    target: str
    length: float
    speed: float
    capacity: float

    @property
    def free_flow_time(self) -> float:
        return self.length / self.speed


@dataclass(frozen=True, eq=False)
class RoadNetwork:
    """Immutable directed road graph.

    ``edges`` keeps file order; ``adjacency`` maps every node to the ids of its
    outgoing edges in that same order.
    """

    nodes: Mapping[str, Node]
    edges: Mapping[str, Edge]
    adjacency: Mapping[str, tuple[str, ...]] = field(repr=False)
    incoming: Mapping[str, tuple[str, ...]] = field(repr=False)

    @classmethod
    def build(cls, nodes: Iterable[Node], edges: Iterable[Edge]) -> "RoadNetwork":
        node_map: dict[str, Node] = {}
        for n in nodes:
            if n.id in node_map:
                raise DuplicateNode(n.id)
            node_map[n.id] = n
        edge_map: dict[str, Edge] = {}
        out: dict[str, list[str]] = {nid: [] for nid in node_map}
        inc: dict[str, list[str]] = {nid: [] for nid in node_map}
        for e in edges:
            if e.id in edge_map:
                raise DuplicateEdge(e.id)
            for endpoint in (e.source, e.target):
                if endpoint not in node_map:
                    raise DanglingEndpoint(e.id, endpoint)
            if e.source == e.target:
                raise SelfLoop(e.id)
            for name in ("length", "speed", "capacity"):
                value = getattr(e, name)
                if not (math.isfinite(value) and value > 0):
                    raise NonPositiveAttribute(e.id, name, value)
            edge_map[e.id] = e
            out[e.source].append(e.id)
            inc[e.target].append(e.id)
        return cls(
            nodes=MappingProxyType(node_map),
            edges=MappingProxyType(edge_map),
            adjacency=MappingProxyType({k: tuple(v) for k, v in out.items()}),
            incoming=MappingProxyType({k: tuple(v) for k, v in inc.items()}),
        )

    def edge(self, edge_id: str) -> Edge:
        try:
            return self.edges[edge_id]
        except KeyError:
            raise UnknownEdge(edge_id) from None

    def check_node(self, node_id: str) -> None:
        if node_id not in self.nodes:
            raise UnknownNode(node_id)

    def __eq__(self, other):
        if not isinstance(other, RoadNetwork):
            return NotImplemented
        return dict(self.nodes) == dict(other.nodes) and list(self.edges.values()) == list(
            other.edges.values()
        )

    def __hash__(self):
        return id(self)


def _read_table(path: Path, header: tuple[str, ...]) -> list[tuple[int, list[str]]]:
    if not path.is_file():
        raise MissingFile(path)
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            first = next(reader)
        except StopIteration:
            raise ParseError(path, 1, "empty file") from None
        if tuple(c.strip() for c in first) != header:
            raise ParseError(path, 1, f"expected header {','.join(header)}")
        rows = []
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(path, reader.line_num, f"expected {len(header)} fields")
            rows.append((reader.line_num, [c.strip() for c in row]))
    return rows


def _float(path, line, text):
    try:
        return float(text)
    except ValueError:
        raise ParseError(path, line, f"not a number: {text!r}") from None


def load_network(directory) -> RoadNetwork:
    """Load ``nodes.csv`` and ``edges.csv`` from *directory*."""
    directory = Path(directory)
    node_path = directory / "nodes.csv"
    edge_path = directory / "edges.csv"
    nodes = [
        Node(row[0], _float(node_path, ln, row[1]), _float(node_path, ln, row[2]))
        for ln, row in _read_table(node_path, NODE_HEADER)
    ]
    edges = [
        Edge(
            row[0],
            row[1],
            row[2],
            _float(edge_path, ln, row[3]),
            _float(edge_path, ln, row[4]),
            _float(edge_path, ln, row[5]),
        )
        for ln, row in _read_table(edge_path, EDGE_HEADER)
    ]
    return RoadNetwork.build(nodes, edges)


def write_network(net: RoadNetwork, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "nodes.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(NODE_HEADER)
        for n in net.nodes.values():
            w.writerow([n.id, repr(n.x), repr(n.y)])
    with open(directory / "edges.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(EDGE_HEADER)
        for e in net.edges.values():
            w.writerow([e.id, e.source, e.target, repr(e.length), repr(e.speed), repr(e.capacity)])


def free_flow_time(net: RoadNetwork, edge_id: str) -> float:
    return net.edge(edge_id).free_flow_time


def reachable(net: RoadNetwork, origin: str, destination: str) -> bool:
    net.check_node(origin)
    net.check_node(destination)
    if origin == destination:
        return True
    seen = {origin}
    todo = deque([origin])
    while todo:
        u = todo.popleft()
        for eid in net.adjacency[u]:
            v = net.edges[eid].target
            if v == destination:
                return True
            if v not in seen:
                seen.add(v)
                todo.append(v)
    return False
