"""GMEC synthesis over reduced admissible/forbidden sets.

A separator is a pair ``(l, b)`` with ``l >= 0`` such that ``l.a <= b`` for
every admissible representative.  It *covers* the forbidden representatives
with ``l.f >= b + 1``.  Separators are enumerated exhaustively over a
bounded integer box and a minimum-size family covering every forbidden
representative is then chosen by exact set cover.  Each chosen constraint
becomes one monitor place.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InadmissibleMarkingError, UnseparableError
from .net import Gmec, Marking, PetriNet, add_monitor, check_marking
from .reachability import DEFAULT_NODE_CAP, build_graph
from .robustness import ReducedSets

__all__ = [
    "Gmec",
    "Candidate",
    "SupervisorPlan",
    "VerificationReport",
    "enumerate_separators",
    "select_minimal_cover",
    "build_supervisor",
    "verify_supervisor",
]

EXACT_COVER_LIMIT = 20

Vector = tuple[int, ...]


@dataclass(frozen=True)
class Candidate:
    gmec: Gmec
    covered: frozenset[Vector]

    @property
    def key(self):
        w = tuple(w for _, w in self.gmec.weights)
        return (sum(w), self.gmec.bound, w)


def _gmec(pe: Sequence[str], l: Sequence[int], b: int) -> Gmec:
    return Gmec.of(zip(pe, (int(x) for x in l)), int(b))


def default_bounds(rs: ReducedSets) -> tuple[int, int]:
    """``a_max = max forbidden token count + 1`` and ``b_max = a_max * |P_E|``."""
    top = max((max(f, default=0) for f in rs.forbidden_reduced), default=0)
    a_max = top + 1
    return a_max, a_max * max(len(rs.projection_places), 1)


def enumerate_separators(
    rs: ReducedSets, a_max: int | None = None, b_max: int | None = None
) -> list[Candidate]:
    """Every ``(l, b)`` in ``[0, a_max]^k x [0, b_max]`` that separates something.

    Returned in canonical order: smaller weight sum, then smaller bound,
    then lexicographic weights.
    """
    if not rs.forbidden_reduced:
        return []
    da, db = default_bounds(rs)
    a_max = da if a_max is None else a_max
    b_max = db if b_max is None else b_max
    pe = rs.projection_places
    k = len(pe)
    grid = np.array(list(itertools.product(range(a_max + 1), repeat=k)), dtype=np.int64)
    grid = grid[grid.any(axis=1)]
    forb = np.array(rs.forbidden_reduced, dtype=np.int64).reshape(-1, k)
    adm = np.array(rs.admissible_reduced, dtype=np.int64).reshape(-1, k)
    f_val = grid @ forb.T
    a_top = (grid @ adm.T).max(axis=1) if len(adm) else np.zeros(len(grid), dtype=np.int64)

    out: list[Candidate] = []
    for b in range(b_max + 1):
        cover = f_val >= b + 1
        rows = np.nonzero((a_top <= b) & cover.any(axis=1))[0]
        for i in rows:
            covered = frozenset(rs.forbidden_reduced[j] for j in np.nonzero(cover[i])[0])
            out.append(Candidate(_gmec(pe, grid[i], b), covered))
    out.sort(key=lambda c: (c.key, sorted(c.covered)))
    return out


def prune_dominated(cands: Iterable[Candidate]) -> list[Candidate]:
    """Drop candidates whose cover is matched by a no-heavier candidate."""
    best: dict[frozenset, Candidate] = {}
    for c in cands:
        if c.covered not in best or c.key < best[c.covered].key:
            best[c.covered] = c
    kept = list(best.values())
    return sorted(
        (
            c for c in kept
            if not any(c.covered < d.covered and d.key[0] <= c.key[0] for d in kept)
        ),
        key=lambda c: c.key,
    )


@dataclass
class SupervisorPlan:
    constraints: tuple[Gmec, ...]
    covered: dict[Gmec, frozenset[Vector]] = field(default_factory=dict)
    optimal: bool = True
    # lower bound on the number of constraints; equals len(constraints) when optimal
    lower_bound: int = 0
    candidates: int = 0

    def __len__(self) -> int:
        return len(self.constraints)

    def matrices(self, net: PetriNet) -> tuple[np.ndarray, np.ndarray]:
        """Stacked weight rows ``L`` over ``net``'s places and bound vector ``B``."""
        L = np.array([g.vector(net) for g in self.constraints], dtype=np.int64)
        L = L.reshape(len(self.constraints), len(net.places))
        B = np.array([g.bound for g in self.constraints], dtype=np.int64)
        return L, B


def _cover_key(combo: Sequence[Candidate]):
    return (
        sum(c.key[0] for c in combo),
        sum(c.key[1] for c in combo),
        sorted(c.key[2] for c in combo),
    )


def select_minimal_cover(
    cands: Sequence[Candidate], forbidden: Iterable[Vector]
) -> SupervisorPlan:
    """Pick the fewest candidates whose covers contain every forbidden vector.

    Exact for up to ``EXACT_COVER_LIMIT`` candidates after dominance
    pruning, greedy otherwise (``optimal`` then reports whether the greedy
    size met the counting lower bound).

    Raises
    ------
    UnseparableError
        If some forbidden vector is covered by no candidate.
    """
    universe = frozenset(forbidden)
    if not universe:
        return SupervisorPlan((), {}, True, 0, len(cands))
    reach = frozenset().union(*(c.covered for c in cands)) if cands else frozenset()
    missing = sorted(universe - reach)
    if missing:
        raise UnseparableError(
            f"no separator excludes forbidden vectors {missing}", uncovered=missing
        )
    pool = prune_dominated(c for c in cands if c.covered & universe)
    widest = max(len(c.covered & universe) for c in pool)
    lower = math.ceil(len(universe) / widest)

    if len(pool) <= EXACT_COVER_LIMIT:
        for size in range(lower, len(pool) + 1):
            hits = [
                combo for combo in itertools.combinations(pool, size)
                if frozenset().union(*(c.covered for c in combo)) >= universe
            ]
            if hits:
                chosen = min(hits, key=_cover_key)
                break
        optimal = True
        lower = len(chosen)
    else:
        chosen, left = [], set(universe)
        while left:
            pick = min(pool, key=lambda c: (-len(c.covered & left), c.key))
            chosen.append(pick)
            left -= pick.covered
        optimal = len(chosen) == lower
    chosen = sorted(chosen, key=lambda c: c.key)
    return SupervisorPlan(
        constraints=tuple(c.gmec for c in chosen),
        covered={c.gmec: c.covered & universe for c in chosen},
        optimal=optimal,
        lower_bound=lower,
        candidates=len(cands),
    )


def build_supervisor(
    net: PetriNet, plan: SupervisorPlan, m_ref: Marking
) -> tuple[PetriNet, Marking]:
    """Add one monitor place per plan constraint."""
    m_ref = check_marking(net, m_ref)
    for g in plan.constraints:
        if g.value(net, m_ref) > g.bound:
            raise InadmissibleMarkingError(
                f"reference marking violates {g}; its monitor would start negative"
            )
    for g in plan.constraints:
        net, m_ref = add_monitor(net, g, m_ref)
    return net, m_ref


@dataclass
class VerificationReport:
    reachable: frozenset
    forbidden_reached: list
    admissible_missing: list
    invariant_violations: list

    @property
    def no_forbidden(self) -> bool:
        return not self.forbidden_reached

    @property
    def maximally_permissive(self) -> bool:
        return not self.admissible_missing

    @property
    def invariants_hold(self) -> bool:
        return not self.invariant_violations

    @property
    def ok(self) -> bool:
        return self.no_forbidden and self.maximally_permissive and self.invariants_hold


def verify_supervisor(
    controlled: PetriNet,
    m0: Marking,
    admissible_full: Iterable[Marking],
    forbidden_full: Iterable[Marking],
    node_cap: int = DEFAULT_NODE_CAP,
) -> VerificationReport:
    """Explore the closed loop and compare it with the intended behaviour.

    Markings are compared after dropping monitor coordinates.
    """
    g = build_graph(controlled, m0, node_cap)
    keep = [i for i, p in enumerate(controlled.places) if p.role != "monitor"]
    reachable = frozenset(tuple(m[i] for i in keep) for m in g.nodes)
    forbidden_full = set(map(tuple, forbidden_full))
    admissible_full = set(map(tuple, admissible_full))
    violations = []
    for pid, gm in controlled.monitors:
        k = controlled.place_index[pid]
        for m in g.nodes:
            if gm.value(controlled, m) + m[k] != gm.bound:
                violations.append((pid, m))
    return VerificationReport(
        reachable=reachable,
        forbidden_reached=sorted(reachable & forbidden_full),
        admissible_missing=sorted(admissible_full - reachable),
        invariant_violations=violations,
    )
