"""Whole-body lumped thermal network: nodes, edges, and the continuous generator.

Default node ordering (it fixes CSV column order):

    0-11  motors, legs FL, FR, RL, RR, each (hip, thigh, knee)
    12    onboard computer
    13    environment (fixed temperature)
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MOTOR = "motor"
COMPUTER = "computer"
ENVIRONMENT = "environment"
NODE_KINDS = (MOTOR, COMPUTER, ENVIRONMENT)

LEGS = ("FL", "FR", "RL", "RR")
JOINT_ROLES = ("hip", "thigh", "knee")
SCHEMA_VERSION = 1


class NetworkError(ValueError):
    """Raised when a thermal network violates its structural invariants."""


@dataclass(frozen=True)
class ThermalNode:
    id: int
    kind: str
    capacitance: float  # J/degC; unused for the environment node
    winding_resistance: float = 0.0  # Ohm, motors only
    aux_heat: float = 0.0  # W, constant friction/driver heat


@dataclass(frozen=True)
class Edge:
    i: int
    j: int
    resistance: float  # degC/W


@dataclass(frozen=True)
class ThermalNetwork:
    nodes: tuple
    edges: tuple
    ambient: float

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(
            self, "edges", tuple(e if isinstance(e, Edge) else Edge(*e) for e in self.edges)
        )
        validate_network(self)

    @property
    def n(self):
        return len(self.nodes)

    @property
    def env_index(self):
        return next(k for k, nd in enumerate(self.nodes) if nd.kind == ENVIRONMENT)

    @property
    def motor_indices(self):
        return tuple(k for k, nd in enumerate(self.nodes) if nd.kind == MOTOR)

    @property
    def capacitances(self):
        return np.array([nd.capacitance for nd in self.nodes], dtype=float)

    @property
    def aux_heat(self):
        q = np.array([nd.aux_heat for nd in self.nodes], dtype=float)
        q[self.env_index] = 0.0
        return q

    def neighbors(self, i):
        """Return ``[(j, R_ij), ...]`` for every edge touching node ``i``."""
        out = []
        for e in self.edges:
            if e.i == i:
                out.append((e.j, e.resistance))
            elif e.j == i:
                out.append((e.i, e.resistance))
        return out

    def resistance(self, i, j):
        a, b = min(i, j), max(i, j)
        for e in self.edges:
            if e.i == a and e.j == b:
                return e.resistance
        raise NetworkError(f"nodes {i} and {j} are not connected by an edge")

    def with_ambient(self, ambient):
        return ThermalNetwork(self.nodes, self.edges, float(ambient))

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "nodes": [
                {
                    "id": nd.id,
                    "kind": nd.kind,
                    "capacitance": nd.capacitance,
                    "winding_resistance": nd.winding_resistance,
                    "aux_heat": nd.aux_heat,
                }
                for nd in self.nodes
            ],
            "edges": [{"i": e.i, "j": e.j, "resistance": e.resistance} for e in self.edges],
            "ambient": self.ambient,
        }


def validate_network(net):
    n = len(net.nodes)
    if n < 2:
        raise NetworkError("a network needs at least one heated node and the environment")
    for k, nd in enumerate(net.nodes):
        if nd.id != k:
            raise NetworkError(f"node at position {k} has id {nd.id}; ids must be 0..n-1 in order")
        if nd.kind not in NODE_KINDS:
            raise NetworkError(f"node {k}: unknown kind {nd.kind!r}")
        if nd.kind != ENVIRONMENT and not nd.capacitance > 0:
            raise NetworkError(f"node {k}: capacitance must be > 0, got {nd.capacitance}")
        if nd.winding_resistance < 0:
            raise NetworkError(f"node {k}: winding_resistance must be >= 0")
        if nd.kind != MOTOR and nd.winding_resistance != 0:
            raise NetworkError(f"node {k}: only motor nodes carry a winding_resistance")
        if not np.isfinite(nd.aux_heat):
            raise NetworkError(f"node {k}: aux_heat must be finite")
    n_env = sum(nd.kind == ENVIRONMENT for nd in net.nodes)
    if n_env != 1:
        raise NetworkError(f"exactly one environment node required, found {n_env}")
    if not np.isfinite(net.ambient):
        raise NetworkError("ambient must be finite")

    seen = set()
    for e in net.edges:
        if not (0 <= e.i < n and 0 <= e.j < n):
            raise NetworkError(f"edge ({e.i}, {e.j}): node index out of range")
        if e.i == e.j:
            raise NetworkError(f"edge ({e.i}, {e.j}): self-edges are not allowed")
        if e.i > e.j:
            raise NetworkError(f"edge ({e.i}, {e.j}): edges must be listed with i < j")
        if (e.i, e.j) in seen:
            raise NetworkError(f"edge ({e.i}, {e.j}) appears twice")
        if not e.resistance > 0:
            raise NetworkError(f"edge ({e.i}, {e.j}): resistance must be > 0, got {e.resistance}")
        seen.add((e.i, e.j))

    # every node must reach the environment
    adj = {k: [] for k in range(n)}
    for e in net.edges:
        adj[e.i].append(e.j)
        adj[e.j].append(e.i)
    env = next(k for k, nd in enumerate(net.nodes) if nd.kind == ENVIRONMENT)
    reached = {env}
    queue = deque([env])
    while queue:
        k = queue.popleft()
        for m in adj[k]:
            if m not in reached:
                reached.add(m)
                queue.append(m)
    missing = sorted(set(range(n)) - reached)
    if missing:
        raise NetworkError(f"nodes {missing} have no path to the environment node")


@dataclass(frozen=True)
class ThermalState:
    temperatures: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        T = np.array(self.temperatures, dtype=float)
        T.flags.writeable = False
        object.__setattr__(self, "temperatures", T)


def initial_state(network, temperature=None):
    """State with every node at ``temperature`` (ambient if omitted); env pinned to ambient.

    ``temperature`` may be a scalar, a per-node vector, or a per-motor vector.
    """
    T = np.full(network.n, network.ambient, dtype=float)
    if temperature is not None:
        t = np.asarray(temperature, dtype=float)
        if t.ndim == 0:
            T[:] = float(t)
        elif t.shape == (network.n,):
            T[:] = t
        elif t.shape == (len(network.motor_indices),):
            T[list(network.motor_indices)] = t
        else:
            raise NetworkError(f"initial temperature of shape {t.shape} fits neither nodes nor motors")
    T[network.env_index] = network.ambient
    return ThermalState(T, 0.0)


@dataclass(frozen=True)
class HeatInput:
    watts: np.ndarray

    def __post_init__(self):
        w = np.array(self.watts, dtype=float)
        if not np.all(np.isfinite(w)):
            raise ValueError("heat input must be finite")
        w.flags.writeable = False
        object.__setattr__(self, "watts", w)


@dataclass(frozen=True)
class ContinuousGenerator:
    """dT/dt = conduction @ T + input_map @ Q for the free (non-env) nodes."""

    conduction: np.ndarray
    input_map: np.ndarray
    env_index: int
    capacitances: np.ndarray = field(repr=False, default=None)


def build_generator(network):
    n = network.n
    env = network.env_index
    C = network.capacitances
    L = np.zeros((n, n))
    for e in network.edges:
        g = 1.0 / e.resistance
        for a, b in ((e.i, e.j), (e.j, e.i)):
            if a == env:
                continue
            L[a, b] += g / C[a]
            L[a, a] -= g / C[a]
    G = np.zeros((n, n))
    for k in range(n):
        if k != env:
            G[k, k] = 1.0 / C[k]
    caps = C.copy()
    caps[env] = np.inf
    return ContinuousGenerator(L, G, env, caps)


def node_rates(network, state, heat):
    """Continuous temperature derivative of every node (environment: 0)."""
    gen = build_generator(network)
    return gen.conduction @ state.temperatures + gen.input_map @ np.asarray(heat.watts)


def pairwise_flow(state, network, i, j):
    """Heat flowing into node ``i`` from node ``j`` in W (negative when ``i`` is hotter)."""
    R = network.resistance(i, j)
    T = state.temperatures
    return -(T[i] - T[j]) / R


# --------------------------------------------------------------------------- io


def network_from_dict(data):
    from .config import ConfigError, check_schema

    check_schema(data, "network")
    try:
        nodes = [
            ThermalNode(
                id=int(nd["id"]),
                kind=str(nd["kind"]),
                capacitance=float(nd.get("capacitance", 0.0)),
                winding_resistance=float(nd.get("winding_resistance", 0.0)),
                aux_heat=float(nd.get("aux_heat", 0.0)),
            )
            for nd in data["nodes"]
        ]
        edges = [Edge(int(e["i"]), int(e["j"]), float(e["resistance"])) for e in data["edges"]]
        ambient = float(data["ambient"])
    except KeyError as exc:
        raise ConfigError(f"network: missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"network: {exc}") from None
    try:
        return ThermalNetwork(nodes, edges, ambient)
    except NetworkError as exc:
        raise ConfigError(f"network: {exc}") from None


def load_network(path):
    """Load a network file; ``builtin:<name>`` selects a shipped file."""
    from .config import read_json

    return network_from_dict(read_json(path))


def default_network(ambient=None):
    """The shipped 14-node quadruped placeholder network (synthetic parameters)."""
    net = load_network("builtin:a1_placeholder_network")
    return net if ambient is None else net.with_ambient(ambient)


def make_quadruped_network(
    motor_capacitance=8.0,
    motor_env_resistance=1.5,
    intra_leg_resistance=3.0,
    hip_computer_resistance=4.0,
    computer_capacitance=150.0,
    computer_env_resistance=1.0,
    winding_resistance=0.12,
    motor_aux_heat=0.5,
    computer_aux_heat=5.0,
    ambient=25.0,
):
    """Build the 12-motor + computer + environment topology.

    Each motor is tied to the environment; within a leg hip-thigh and
    thigh-knee are coupled; every hip is coupled to the computer, which is
    itself tied to the environment.
    """
    nodes = [
        ThermalNode(k, MOTOR, motor_capacitance, winding_resistance, motor_aux_heat)
        for k in range(12)
    ]
    nodes.append(ThermalNode(12, COMPUTER, computer_capacitance, 0.0, computer_aux_heat))
    nodes.append(ThermalNode(13, ENVIRONMENT, 0.0, 0.0, 0.0))
    edges = []
    for leg in range(4):
        hip, thigh, knee = 3 * leg, 3 * leg + 1, 3 * leg + 2
        edges.append(Edge(hip, thigh, intra_leg_resistance))
        edges.append(Edge(thigh, knee, intra_leg_resistance))
        edges.append(Edge(hip, 12, hip_computer_resistance))
    for k in range(12):
        edges.append(Edge(k, 13, motor_env_resistance))
    edges.append(Edge(12, 13, computer_env_resistance))
    edges.sort(key=lambda e: (e.i, e.j))
    return ThermalNetwork(nodes, edges, ambient)


def motor_names():
    return [f"{leg}_{role}" for leg in LEGS for role in JOINT_ROLES]


def dump_network(network, path):
    Path(path).write_text(json.dumps(network.to_dict(), indent=2) + "\n")
