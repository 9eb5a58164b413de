"""Impact of an unreliable resource failing.

A reachable marking is *robust* with respect to an unreliable resource ``r``
when, after every unit of ``r`` breaks down at that marking, the subnets that
never hold ``r`` can still cycle forever.  Total breakdown is modelled on
the plain net by withdrawing the idle units (``m(r) := 0``) and freezing every
transition that consumes from a place in the support of ``r``'s semiflow:
no operation can acquire a unit, and no operation currently holding one can
complete.  Robustness is then an existence question on the resulting finite
graph: some reachable SCC must fire every transition of every independent
subnet.

Markings that are not robust feed the forbidden set used for supervisor
synthesis.  Before synthesis both sets are projected onto a small set of
observed places and reduced to their maximal (admissible) and minimal
(forbidden) elements.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import ArgumentError, MarkingError, ProjectionError
from .net import Marking, PetriNet, check_marking
from .reachability import DEFAULT_NODE_CAP, ReachabilityGraph, build_graph, components
from .structure import S4prStructure, independent_subnets

POLICIES = ("full", "threshold")


@dataclass(frozen=True)
class Classification:
    resource: str
    places: tuple[str, ...]
    robust: frozenset
    unrobust: frozenset

    @property
    def all(self) -> frozenset:
        return self.robust | self.unrobust


@dataclass(frozen=True)
class ReducedSets:
    projection_places: tuple[str, ...]
    admissible_reduced: tuple[tuple[int, ...], ...]
    forbidden_reduced: tuple[tuple[int, ...], ...]
    # projections before domination filtering, kept for checking
    admissible_projected: tuple[tuple[int, ...], ...] = ()
    forbidden_projected: tuple[tuple[int, ...], ...] = ()


def failure_net(net: PetriNet, r: str, m: Marking, j: int) -> tuple[PetriNet, Marking]:
    """Withdraw ``j`` idle units of ``r`` from ``m``.

    Only idle units can fail, so ``m(r) >= j`` is required.
    """
    m = check_marking(net, m)
    if net.place(r).role != "resource":
        raise ArgumentError(f"{r!r} is not a resource place", code="NOT_RESOURCE")
    k = net.place_index[r]
    if j < 0:
        raise ArgumentError(f"cannot fail a negative number of units ({j})")
    if m[k] < j:
        raise MarkingError(
            f"only {m[k]} idle units of {r} can fail, {j} requested", code="CANNOT_FAIL"
        )
    out = list(m)
    out[k] -= j
    return net, tuple(out)


def frozen_transitions(net: PetriNet, s: S4prStructure, r: str) -> frozenset[str]:
    """Transitions that cannot fire while every unit of ``r`` is down."""
    support = s.semiflow(r).support
    return frozenset(
        t.id for t in net.transitions if support & set(net.preset(t.id))
    )


def independent_transitions(s: S4prStructure, r: str) -> frozenset[str]:
    keep = independent_subnets(s, r)
    return frozenset().union(*(s.transitions.get(i, frozenset()) for i in keep))


def is_robust(
    net: PetriNet,
    s: S4prStructure,
    m: Marking,
    r: str,
    node_cap: int = DEFAULT_NODE_CAP,
) -> bool:
    required = independent_transitions(s, r)
    _, m_fail = failure_net(net, r, m, m[net.place_index[r]])
    g = build_graph(net, m_fail, node_cap, disabled=frozen_transitions(net, s, r))
    return any(required <= c["transitions"] for c in components(g))


def classify(
    net: PetriNet,
    s: S4prStructure,
    g: ReachabilityGraph,
    r: str,
    node_cap: int = DEFAULT_NODE_CAP,
) -> Classification:
    """Split the nodes of ``g`` into robust and non-robust markings."""
    if r not in s.unreliable:
        raise ArgumentError(f"{r!r} is not an unreliable resource", code="NOT_UNRELIABLE")
    robust, unrobust = set(), set()
    for m in g.nodes:
        (robust if is_robust(net, s, m, r, node_cap) else unrobust).add(m)
    return Classification(r, g.places, frozenset(robust), frozenset(unrobust))


def forbidden_set(c: Classification, r: str, i: int, policy: str = "full") -> frozenset:
    """Markings a model for ``i`` failed units must exclude.

    ``"full"`` forbids every non-robust marking.  ``"threshold"`` keeps only
    the non-robust markings with at least ``i`` idle units of ``r``.
    """
    if policy not in POLICIES:
        raise ArgumentError(f"unknown forbidden-set policy {policy!r}")
    if i < 1:
        raise ArgumentError(f"failed-unit count must be at least 1, got {i}")
    if policy == "full":
        return c.unrobust
    k = c.places.index(r)
    return frozenset(m for m in c.unrobust if m[k] >= i)


def _project(ms: Iterable[Marking], idx: list[int]) -> set[tuple[int, ...]]:
    return {tuple(m[i] for i in idx) for m in ms}


def _indices(places: tuple[str, ...], pe: Iterable[str]) -> list[int]:
    try:
        return [places.index(p) for p in pe]
    except ValueError as exc:
        raise ArgumentError(f"projection place not in net: {exc}") from None


def select_projection_places(
    net: PetriNet, s: S4prStructure, c: Classification, r: str
) -> list[str]:
    """Places the supervisor needs to observe.

    Starts from the operation places of subnets that use ``r`` and drops
    the ones that are empty in every non-robust marking: with non-negative
    weights such a coordinate can only raise admissible values, so it never
    helps a separator.  The remaining set must project the robust and
    non-robust markings to disjoint sets; if not, all operation places are
    tried before giving up.
    """
    dependent = set(s.subnets) - independent_subnets(s, r)
    dep_ops = set().union(*(s.operation_places.get(i, frozenset()) for i in dependent))
    idx = net.place_index
    candidate = [
        p for p in net.place_ids
        if p in dep_ops and any(m[idx[p]] for m in c.unrobust)
    ]
    for pe in (candidate, [p for p in net.place_ids if p in s.all_operation_places]):
        ix = [idx[p] for p in pe]
        if not _project(c.robust, ix) & _project(c.unrobust, ix):
            return pe
    raise ProjectionError(
        "robust and non-robust markings coincide on every operation place; "
        "no projection separates them"
    )


def _dominates(a: tuple[int, ...], b: tuple[int, ...]) -> bool:
    return all(x >= y for x, y in zip(a, b))


def maximal_elements(vs: Iterable[tuple[int, ...]]) -> list[tuple[int, ...]]:
    vs = sorted(set(vs))
    return [v for v in vs if not any(w != v and _dominates(w, v) for w in vs)]


def minimal_elements(vs: Iterable[tuple[int, ...]]) -> list[tuple[int, ...]]:
    vs = sorted(set(vs))
    return [v for v in vs if not any(w != v and _dominates(v, w) for w in vs)]


def reduce(
    net: PetriNet,
    admissible: Iterable[Marking],
    forbidden: Iterable[Marking],
    pe: Iterable[str],
) -> ReducedSets:
    """Project onto ``pe`` and keep only the representatives that matter.

    A forbidden projection that dominates another forbidden one is implied
    by it, and an admissible projection dominated by another admissible one
    is implied too, so only minimal forbidden and maximal admissible
    vectors are kept.
    """
    pe = tuple(pe)
    ix = _indices(net.place_ids, pe)
    a = _project(admissible, ix)
    f = _project(forbidden, ix)
    overlap = a & f
    if overlap:
        raise ProjectionError(
            f"admissible and forbidden markings share projections {sorted(overlap)} on {list(pe)}"
        )
    return ReducedSets(
        projection_places=pe,
        admissible_reduced=tuple(maximal_elements(a)),
        forbidden_reduced=tuple(minimal_elements(f)),
        admissible_projected=tuple(sorted(a)),
        forbidden_projected=tuple(sorted(f)),
    )
