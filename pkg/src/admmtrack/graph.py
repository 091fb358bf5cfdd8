"""Undirected communication topologies and consensus weight matrices."""

from __future__ import annotations

import json
from collections import deque

import numpy as np


class GraphConstructionError(RuntimeError):
    pass


class Topology:
    """Undirected connected graph with directed edge-slot bookkeeping.

    Edge variables of the ADMM consensus protocol live on *directed* slots:
    the pair (i, j) and (j, i) are distinct storage keys even though the
    topology itself is undirected.  Slots are ordered lexicographically by
    (owner, sorted neighbor position); this ordering is fixed library-wide.
    """

    def __init__(self, n_agents: int, edges):
        if n_agents < 1:
            raise GraphConstructionError("n_agents must be >= 1")
        norm = set()
        for i, j in edges:
            if i == j:
                raise GraphConstructionError(f"self-loop on agent {i}")
            if not (0 <= i < n_agents and 0 <= j < n_agents):
                raise GraphConstructionError(f"edge ({i},{j}) out of range")
            norm.add((min(i, j), max(i, j)))
        self.n_agents = int(n_agents)
        self.edges = frozenset(norm)

        nbrs = [[] for _ in range(n_agents)]
        for i, j in norm:
            nbrs[i].append(j)
            nbrs[j].append(i)
        self.neighbors = tuple(tuple(sorted(v)) for v in nbrs)
        self.degrees = np.array([len(v) for v in self.neighbors], dtype=np.int64)
        self.total_degree = int(self.degrees.sum())

        # directed slots, lexicographic by (owner, neighbor)
        slots = []
        for i in range(n_agents):
            for j in self.neighbors[i]:
                slots.append((i, j))
        self.slots = tuple(slots)
        self.slot_index = {ij: k for k, ij in enumerate(slots)}
        self.slot_owner = np.array([i for i, _ in slots], dtype=np.int64)
        self.slot_peer = np.array([j for _, j in slots], dtype=np.int64)
        self.slot_rev = np.array(
            [self.slot_index[(j, i)] for i, j in slots], dtype=np.int64
        )
        starts = np.zeros(n_agents + 1, dtype=np.int64)
        np.cumsum(self.degrees, out=starts[1:])
        self.slot_starts = starts

        if not is_connected(self):
            raise GraphConstructionError("topology is not connected")

    @property
    def n_slots(self) -> int:
        return self.total_degree

    def to_json(self) -> str:
        return json.dumps(
            {"n_agents": self.n_agents, "edges": sorted(map(list, self.edges))}
        )

    @classmethod
    def from_json(cls, text: str) -> "Topology":
        d = json.loads(text)
        return cls(d["n_agents"], [tuple(e) for e in d["edges"]])

    def __repr__(self):
        return f"Topology(n_agents={self.n_agents}, edges={len(self.edges)})"


def is_connected(t: Topology) -> bool:
    """Breadth-first traversal from agent 0 reaches all agents."""
    seen = [False] * t.n_agents
    seen[0] = True
    queue = deque([0])
    count = 1
    while queue:
        i = queue.popleft()
        for j in t.neighbors[i]:
            if not seen[j]:
                seen[j] = True
                count += 1
                queue.append(j)
    return count == t.n_agents


def ring(n_agents: int) -> Topology:
    return Topology(n_agents, [(i, (i + 1) % n_agents) for i in range(n_agents)])


def complete(n_agents: int) -> Topology:
    return Topology(
        n_agents,
        [(i, j) for i in range(n_agents) for j in range(i + 1, n_agents)],
    )


def star(n_agents: int) -> Topology:
    return Topology(n_agents, [(0, j) for j in range(1, n_agents)])


def path(n_agents: int) -> Topology:
    return Topology(n_agents, [(i, i + 1) for i in range(n_agents - 1)])


def erdos_renyi(
    n_agents: int, p: float, seed: int, max_retries: int = 10000
) -> Topology:
    """Connected Erdos-Renyi draw; disconnected draws are redrawn.

    Each unordered pair is included independently with probability `p`.
    Draws failing the connectivity requirement are rejected and redrawn
    with the next derived seed, up to `max_retries` attempts.
    """
    if n_agents < 2:
        raise GraphConstructionError("erdos_renyi needs n_agents >= 2")
    if not (0.0 < p <= 1.0):
        raise GraphConstructionError(f"p must be in (0, 1], got {p}")
    for attempt in range(max_retries):
        rng = np.random.default_rng([seed, attempt])
        edges = [
            (i, j)
            for i in range(n_agents)
            for j in range(i + 1, n_agents)
            if rng.random() < p
        ]
        try:
            return Topology(n_agents, edges)
        except GraphConstructionError:
            continue
    raise GraphConstructionError(
        f"no connected draw in {max_retries} tries (n_agents={n_agents}, p={p})"
    )


def metropolis_weights(t: Topology) -> np.ndarray:
    """Symmetric doubly stochastic Metropolis-Hastings weights on `t`."""
    n = t.n_agents
    w = np.zeros((n, n))
    for i, j in t.edges:
        w[i, j] = w[j, i] = 1.0 / (1.0 + max(t.degrees[i], t.degrees[j]))
    np.fill_diagonal(w, 1.0 - w.sum(axis=1))
    return w
