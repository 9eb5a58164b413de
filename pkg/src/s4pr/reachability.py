"""Explicit state-space exploration.

The reachability graph stores markings in discovery order with integer node
ids; edges are ``(source_id, transition, target_id)`` triples.  Liveness is
decided on the condensation: a transition is live iff every terminal strongly
connected component contains an edge labelled with it.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ArgumentError, CapacityError
from .net import Marking, PetriNet, _enabled_index, _fire_index, check_marking, enabled_transitions

DEFAULT_NODE_CAP = 1_000_000


@dataclass(frozen=True)
class ReachabilityGraph:
    places: tuple[str, ...]
    nodes: tuple[Marking, ...]
    edges: tuple[tuple[int, str, int], ...]
    index: dict = field(compare=False, repr=False)

    @property
    def root(self) -> Marking:
        return self.nodes[0]

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, m) -> bool:
        return tuple(m) in self.index

    @property
    def node_set(self) -> frozenset:
        return frozenset(self.nodes)

    @property
    def edge_set(self) -> frozenset:
        return frozenset((self.nodes[a], t, self.nodes[b]) for a, t, b in self.edges)

    def successors(self, i: int) -> list[tuple[str, int]]:
        return [(t, b) for a, t, b in self.edges if a == i]

    def adjacency(self) -> list[list[tuple[str, int]]]:
        adj: list[list[tuple[str, int]]] = [[] for _ in self.nodes]
        for a, t, b in self.edges:
            adj[a].append((t, b))
        return adj


def build_graph(
    net: PetriNet,
    m0: Marking,
    node_cap: int = DEFAULT_NODE_CAP,
    *,
    disabled: Iterable[str] = (),
    order: str = "bfs",
) -> ReachabilityGraph:
    """Enumerate every marking reachable from ``m0``.

    Parameters
    ----------
    disabled
        Transitions that are never fired, as if they were removed from the
        net.
    order
        ``"bfs"`` or ``"dfs"``; only affects node numbering.

    Raises
    ------
    CapacityError
        If more than ``node_cap`` markings are found.
    """
    m0 = check_marking(net, m0)
    if node_cap < 1:
        raise ArgumentError(f"node cap must be positive, got {node_cap}")
    if order not in ("bfs", "dfs"):
        raise ArgumentError(f"unknown exploration order {order!r}")
    skip = set(disabled)
    unknown = skip - set(net.transition_ids)
    if unknown:
        raise ArgumentError(f"unknown transitions {sorted(unknown)}")
    active = [(j, t.id) for j, t in enumerate(net.transitions) if t.id not in skip]

    index = {m0: 0}
    nodes = [m0]
    edges = []
    frontier = deque([m0])
    pop = frontier.popleft if order == "bfs" else frontier.pop
    while frontier:
        m = pop()
        a = index[m]
        for j, t in active:
            if not _enabled_index(net, m, j):
                continue
            m2 = _fire_index(net, m, j)
            b = index.get(m2)
            if b is None:
                if len(nodes) >= node_cap:
                    raise CapacityError(
                        f"more than {node_cap} reachable markings; the net may be unbounded"
                    )
                b = index[m2] = len(nodes)
                nodes.append(m2)
                frontier.append(m2)
            edges.append((a, t, b))
    return ReachabilityGraph(net.place_ids, tuple(nodes), tuple(edges), index)


def scc_labels(g: ReachabilityGraph) -> tuple[int, np.ndarray]:
    """Strongly connected component label of every node."""
    n = len(g.nodes)
    if not g.edges:
        return n, np.arange(n)
    src = np.fromiter((a for a, _, _ in g.edges), dtype=np.int64, count=len(g.edges))
    dst = np.fromiter((b for _, _, b in g.edges), dtype=np.int64, count=len(g.edges))
    adj = csr_matrix((np.ones(len(src), dtype=np.int8), (src, dst)), shape=(n, n))
    return connected_components(adj, directed=True, connection="strong")


def components(g: ReachabilityGraph) -> list[dict]:
    """SCC summaries: member node ids, internal edge labels, terminal flag."""
    count, labels = scc_labels(g)
    comps = [{"nodes": [], "transitions": set(), "terminal": True} for _ in range(count)]
    for i, c in enumerate(labels):
        comps[c]["nodes"].append(i)
    for a, t, b in g.edges:
        ca, cb = labels[a], labels[b]
        if ca == cb:
            comps[ca]["transitions"].add(t)
        else:
            comps[ca]["terminal"] = False
    return comps


def terminal_components(g: ReachabilityGraph) -> list[dict]:
    return [c for c in components(g) if c["terminal"]]


def deadlocks(g: ReachabilityGraph, net: PetriNet) -> set[Marking]:
    """Reachable markings at which no transition of ``net`` is enabled."""
    return {m for m in g.nodes if not enabled_transitions(net, m)}


def bounds(g: ReachabilityGraph) -> dict[str, int]:
    """Per-place maximum token count over all reachable markings."""
    top = np.max(np.asarray(g.nodes, dtype=np.int64), axis=0)
    return {p: int(k) for p, k in zip(g.places, top)}


@dataclass
class LivenessReport:
    live: dict[str, bool]
    # for each non-live transition, a reachable marking from which it can never fire again
    witnesses: dict[str, Marking]

    @property
    def all_live(self) -> bool:
        return all(self.live.values())

    def dead(self) -> list[str]:
        return [t for t, ok in self.live.items() if not ok]


def liveness(
    g: ReachabilityGraph, net: PetriNet, ts: Iterable[str] | None = None
) -> LivenessReport:
    ts = list(net.transition_ids if ts is None else ts)
    for t in ts:
        if t not in net.transition_index:
            raise ArgumentError(f"unknown transition {t!r}")
    terminal = terminal_components(g)
    live: dict[str, bool] = {}
    witnesses: dict[str, Marking] = {}
    for t in ts:
        bad = next((c for c in terminal if t not in c["transitions"]), None)
        live[t] = bad is None
        if bad is not None:
            witnesses[t] = g.nodes[bad["nodes"][0]]
    return LivenessReport(live, witnesses)
