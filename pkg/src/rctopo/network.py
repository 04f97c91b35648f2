"""RC network description, validation and forward-Euler discretization.

Nodes are addressed by their position in ``RcNetwork.nodes`` everywhere in
the numerical code; the user-facing ``id`` of each node is only used for
reporting and file I/O. Edge sets are frozensets of index pairs ``(i, j)``
with ``i < j``.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from itertools import combinations
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import InvalidNetwork, MalformedFile, UnstableDiscretization

EdgeSet = frozenset


def make_edge(i: int, j: int) -> tuple[int, int]:
    """Canonical (sorted) form of an undirected edge."""
    return (i, j) if i < j else (j, i)


def edge_set(pairs: Iterable[tuple[int, int]]) -> frozenset:
    return frozenset(make_edge(i, j) for i, j in pairs)


@dataclass(frozen=True)
class Node:
    id: object
    capacitance: float
    ambient_resistance: Optional[float] = None


@dataclass(frozen=True)
class Branch:
    a: object
    b: object
    resistance: float


@dataclass(frozen=True)
class RcNetwork:
    nodes: tuple
    edges: tuple = ()
    dt: float = 1.0

    @property
    def m(self) -> int:
        return len(self.nodes)

    @property
    def labels(self) -> list[str]:
        return [str(n.id) for n in self.nodes]

    def index_of(self, node_id) -> int:
        for k, n in enumerate(self.nodes):
            if n.id == node_id or str(n.id) == str(node_id):
                return k
        raise KeyError(f"unknown node {node_id!r}")

    def label_edges(self, edges) -> list[tuple]:
        """Translate an index edge set back to node ids, sorted."""
        return sorted((self.nodes[i].id, self.nodes[j].id) for i, j in edges)

    def to_dict(self) -> dict:
        nodes = []
        for n in self.nodes:
            d = {"id": n.id, "capacitance": n.capacitance}
            if n.ambient_resistance is not None:
                d["ambient_resistance"] = n.ambient_resistance
            nodes.append(d)
        return {
            "dt": self.dt,
            "nodes": nodes,
            "edges": [{"a": e.a, "b": e.b, "resistance": e.resistance} for e in self.edges],
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass
class ValidationReport:
    findings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.findings

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class DiscreteDynamics:
    A: np.ndarray
    dt: float

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.A))))


def network_from_dict(data: dict) -> RcNetwork:
    try:
        nodes = tuple(
            Node(
                id=n["id"],
                capacitance=float(n["capacitance"]),
                ambient_resistance=(
                    None if n.get("ambient_resistance") is None else float(n["ambient_resistance"])
                ),
            )
            for n in data["nodes"]
        )
        edges = tuple(
            Branch(a=e["a"], b=e["b"], resistance=float(e["resistance"]))
            for e in data.get("edges", [])
        )
        dt = float(data.get("dt", 1.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedFile(f"bad network description: {exc!r}") from exc
    return RcNetwork(nodes=nodes, edges=edges, dt=dt)


def load_network(path) -> RcNetwork:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"network file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise MalformedFile(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return network_from_dict(data)


def save_network(net: RcNetwork, path) -> None:
    Path(path).write_text(json.dumps(net.to_dict(), indent=2) + "\n")


def default_network_path() -> Path:
    return Path(str(resources.files("rctopo") / "data" / "five_zone.json"))


def five_zone_network() -> RcNetwork:
    """The shipped 5-zone building: core zone 1, perimeter ring 2-3-4-5."""
    return load_network(default_network_path())


def validate(net: RcNetwork) -> ValidationReport:
    report = ValidationReport()
    seen_ids = set()
    for n in net.nodes:
        if n.id in seen_ids:
            report.findings.append(f"duplicate node {n.id}")
        seen_ids.add(n.id)
        if not n.capacitance > 0:
            report.findings.append(f"non-positive capacitance at node {n.id}")
        if n.ambient_resistance is not None and not n.ambient_resistance > 0:
            report.findings.append(f"non-positive ambient resistance at node {n.id}")

    seen_pairs = set()
    for e in net.edges:
        tag = f"({e.a},{e.b})"
        if e.a == e.b:
            report.findings.append(f"self-loop at node {e.a}")
            continue
        for end in (e.a, e.b):
            if end not in seen_ids:
                report.findings.append(f"edge {tag} references unknown node {end}")
        pair = frozenset((e.a, e.b))
        if pair in seen_pairs:
            report.findings.append(f"duplicate edge {tag}")
        seen_pairs.add(pair)
        if not e.resistance > 0:
            report.findings.append(f"non-positive resistance on {tag}")
    return report


def _require_valid(net: RcNetwork) -> None:
    report = validate(net)
    if not report.ok:
        raise InvalidNetwork(report.findings)


def discretize(net: RcNetwork, dt: Optional[float] = None) -> DiscreteDynamics:
    """Forward-Euler transition matrix of the RC network.

    Off-diagonal entries are ``dt / (R_ji C_j)``; the diagonal is
    ``1 - dt * (sum_i 1/(R_ji C_j) + 1/(R_amb_j C_j))``.

    Raises
    ------
    UnstableDiscretization
        If some diagonal entry is not positive (step too coarse), or if the
        network has ambient coupling and the spectral radius is not below 1.
    """
    _require_valid(net)
    dt = net.dt if dt is None else float(dt)
    if not dt > 0:
        raise ValueError("dt must be positive")
    m = net.m
    A = np.zeros((m, m))
    for e in net.edges:
        i, j = net.index_of(e.a), net.index_of(e.b)
        A[j, i] = dt / (e.resistance * net.nodes[j].capacitance)
        A[i, j] = dt / (e.resistance * net.nodes[i].capacitance)
    for j, n in enumerate(net.nodes):
        loss = A[j].sum()
        if n.ambient_resistance is not None:
            loss += dt / (n.ambient_resistance * n.capacitance)
        A[j, j] = 1.0 - loss
    bad = [net.nodes[j].id for j in range(m) if A[j, j] <= 0]
    if bad:
        raise UnstableDiscretization(
            f"non-positive self-coefficient at nodes {bad}; reduce dt (currently {dt})"
        )
    dyn = DiscreteDynamics(A=A, dt=dt)
    if any(n.ambient_resistance is not None for n in net.nodes):
        rho = dyn.spectral_radius
        if rho >= 1.0:
            raise UnstableDiscretization(f"spectral radius {rho:.6g} >= 1")
    return dyn


def true_edge_set(net: RcNetwork) -> frozenset:
    _require_valid(net)
    return edge_set((net.index_of(e.a), net.index_of(e.b)) for e in net.edges)


def neighbors(edges, m: int) -> list[set]:
    out = [set() for _ in range(m)]
    for i, j in edges:
        out[i].add(j)
        out[j].add(i)
    return out


def two_hop_neighbors(edges, m: int) -> list[set]:
    """Nodes sharing at least one neighbor with each node (the node itself excluded)."""
    nbrs = neighbors(edges, m)
    out = [set() for _ in range(m)]
    for k in range(m):
        for i, j in combinations(sorted(nbrs[k]), 2):
            out[i].add(j)
            out[j].add(i)
    return out


def strict_two_hop_pairs(edges, m: int) -> frozenset:
    nbrs = neighbors(edges, m)
    hop2 = two_hop_neighbors(edges, m)
    return frozenset(
        (i, j) for i in range(m) for j in hop2[i] if i < j and j not in nbrs[i]
    )


def moral_pairs(edges, m: int) -> frozenset:
    """Pairs that are neighbors or two-hop neighbors."""
    hop2 = two_hop_neighbors(edges, m)
    return frozenset(edges) | edge_set((i, j) for i in range(m) for j in hop2[i])
