"""Exception hierarchy.

Two roots matter to callers: :class:`ValidationError` (bad inputs or configs,
CLI exit code 2) and :class:`SimulationError` (failures while running, CLI exit
code 3).
"""

from __future__ import annotations


class RouteBenchError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(RouteBenchError):
    pass


class SimulationError(RouteBenchError):
    pass


# -- input files -------------------------------------------------------------

class MissingFile(ValidationError):
    def __init__(self, path):
        self.path = path
        super().__init__(f"missing file: {path}")


class ParseError(ValidationError):
    def __init__(self, path, line: int, reason: str = ""):
        self.path = path
        self.line = line
        msg = f"{path}:{line}: parse error"
        super().__init__(f"{msg}: {reason}" if reason else msg)


# -- network -----------------------------------------------------------------

class DanglingEndpoint(ValidationError):
    def __init__(self, edge_id: str, node_id: str):
        self.edge_id = edge_id
        self.node_id = node_id
        super().__init__(f"edge {edge_id!r} references unknown node {node_id!r}")


class NonPositiveAttribute(ValidationError):
    def __init__(self, edge_id: str, field: str, value=None):
        self.edge_id = edge_id
        self.field = field
        super().__init__(f"edge {edge_id!r}: {field} must be > 0 (got {value!r})")


class DuplicateNode(ValidationError):
    def __init__(self, node_id: str):
        self.node_id = node_id
        super().__init__(f"duplicate node id {node_id!r}")


class DuplicateEdge(ValidationError):
    def __init__(self, edge_id: str):
        self.edge_id = edge_id
        super().__init__(f"duplicate edge id {edge_id!r}")


class SelfLoop(ValidationError):
    def __init__(self, edge_id: str):
        self.edge_id = edge_id
        super().__init__(f"edge {edge_id!r} starts and ends at the same node")


class UnknownEdge(ValidationError, KeyError):
    def __init__(self, edge_id: str):
        self.edge_id = edge_id
        ValidationError.__init__(self, f"unknown edge {edge_id!r}")

    __str__ = ValidationError.__str__


class UnknownNode(ValidationError, KeyError):
    def __init__(self, node_id: str):
        self.node_id = node_id
        ValidationError.__init__(self, f"unknown node {node_id!r}")

    __str__ = ValidationError.__str__


# -- route generation --------------------------------------------------------

class Unreachable(ValidationError):
    def __init__(self, origin: str, destination: str):
        self.origin = origin
        self.destination = destination
        super().__init__(f"{destination!r} is not reachable from {origin!r}")


class InsufficientRoutes(ValidationError):
    def __init__(self, found: int, requested: int, od: tuple[str, str] | None = None):
        self.found = found
        self.requested = requested
        self.od = od
        where = f" for OD {od[0]!r}->{od[1]!r}" if od else ""
        super().__init__(f"found {found} distinct routes{where}, {requested} requested")


# -- demand ------------------------------------------------------------------

class DuplicateId(ValidationError):
    def __init__(self, agent_id: int):
        self.agent_id = agent_id
        super().__init__(f"duplicate agent id {agent_id}")


class NegativeDeparture(ValidationError):
    def __init__(self, agent_id: int):
        self.agent_id = agent_id
        super().__init__(f"agent {agent_id} has a negative departure time")


# -- traffic -----------------------------------------------------------------

class InvalidChoice(SimulationError):
    def __init__(self, agent_id: int, index):
        self.agent_id = agent_id
        self.index = index
        super().__init__(f"agent {agent_id}: invalid route index {index!r}")


class SimulationHorizonExceeded(SimulationError):
    def __init__(self, horizon_s: float, agent_id: int | None = None):
        self.horizon_s = horizon_s
        self.agent_id = agent_id
        super().__init__(
            f"vehicle {agent_id} still en route after the {horizon_s:g} s horizon"
        )


# -- learners ----------------------------------------------------------------

class EmptyRouteSet(ValidationError):
    def __init__(self):
        super().__init__("route set is empty")


class InvalidRoute(SimulationError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"invalid route index {index!r}")


class EmptyGroup(RouteBenchError):
    def __init__(self, group: str):
        self.group = group
        super().__init__(f"group {group!r} is empty")


class PhaseMissing(ValidationError):
    def __init__(self, phase: str, detail: str = ""):
        self.phase = phase
        super().__init__(f"record lacks phase {phase!r}" + (f": {detail}" if detail else ""))


# -- configuration -----------------------------------------------------------

class ConfigError(ValidationError):
    pass


class UnknownConfigId(ConfigError):
    def __init__(self, kind: str, config_id: str):
        self.kind = kind
        self.config_id = config_id
        super().__init__(f"unknown {kind} config {config_id!r}")


class UnknownNetwork(ConfigError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown network {name!r}")


class SchemaError(ConfigError):
    def __init__(self, path, field: str, reason: str = "invalid value"):
        self.path = path
        self.field = field
        super().__init__(f"{path}: field {field!r}: {reason}")


class ExperimentExists(ConfigError):
    def __init__(self, path):
        self.path = path
        super().__init__(f"results directory already exists, refusing to overwrite: {path}")
