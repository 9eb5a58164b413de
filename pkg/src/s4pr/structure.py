"""Structural layer for S4PR nets.

An S4PR net is a family of state-machine process subnets, each with one
idle place, that share conservative resource places.  This module recovers
that structure from place roles, checks the class conditions and computes
the per-resource P-semiflows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .errors import ArgumentError, NetStructureError
from .net import Diagnostic, Marking, PetriNet, check_marking, incidence_matrix


@dataclass(frozen=True)
class SemiFlow:
    """Non-negative place invariant ``I`` of one resource, ``I(resource) = 1``."""

    resource: str
    weights: tuple[tuple[str, int], ...]

    @property
    def support(self) -> frozenset[str]:
        return frozenset(p for p, _ in self.weights)

    def __getitem__(self, place: str) -> int:
        return dict(self.weights).get(place, 0)

    def as_dict(self) -> dict[str, int]:
        return dict(self.weights)

    def value(self, net: PetriNet, m: Marking) -> int:
        idx = net.place_index
        return sum(w * m[idx[p]] for p, w in self.weights if p in idx)


@dataclass
class S4prStructure:
    idle_places: dict[int, str]
    operation_places: dict[int, frozenset[str]]
    transitions: dict[int, frozenset[str]]
    resource_places: tuple[str, ...]
    unreliable: frozenset[str] = frozenset()
    semiflows: dict[str, SemiFlow] = field(default_factory=dict)

    @property
    def subnets(self) -> list[int]:
        return sorted(set(self.idle_places) | set(self.operation_places) | set(self.transitions))

    @property
    def reliable(self) -> tuple[str, ...]:
        return tuple(r for r in self.resource_places if r not in self.unreliable)

    @property
    def all_operation_places(self) -> frozenset[str]:
        return frozenset().union(*self.operation_places.values()) if self.operation_places else frozenset()

    def subnet_of_place(self, pid: str) -> int | None:
        for i, idle in self.idle_places.items():
            if idle == pid:
                return i
        for i, ops in self.operation_places.items():
            if pid in ops:
                return i
        return None

    def semiflow(self, r: str) -> SemiFlow:
        try:
            return self.semiflows[r]
        except KeyError:
            raise ArgumentError(f"no semiflow known for {r!r}") from None


def structure_from_net(net: PetriNet, unreliable: Iterable[str] | None = None) -> S4prStructure:
    """Read the subnet partition off the place roles and compute semiflows.

    Resources whose semiflow cannot be computed are left out of
    ``semiflows``; :func:`validate_s4pr` reports them.
    """
    idle: dict[int, str] = {}
    ops: dict[int, set[str]] = {}
    for p in net.places:
        if p.role == "idle":
            idle[p.subnet] = p.id
        elif p.role == "operation":
            ops.setdefault(p.subnet, set()).add(p.id)
    trans: dict[int, set[str]] = {}
    for t in net.transitions:
        if t.subnet:
            trans.setdefault(t.subnet, set()).add(t.id)
    resources = net.places_with_role("resource")
    if unreliable is None:
        unreliable = [p.id for p in net.places if p.unreliable]
    s = S4prStructure(
        idle_places=idle,
        operation_places={i: frozenset(v) for i, v in ops.items()},
        transitions={i: frozenset(v) for i, v in trans.items()},
        resource_places=resources,
        unreliable=frozenset(unreliable),
    )
    for r in resources:
        try:
            s.semiflows[r] = resource_semiflow(net, r)
        except NetStructureError:
            pass
    return s


def _solve_unique(a: list[list[Fraction]], c: list[Fraction]) -> list[Fraction]:
    """Exact Gauss-Jordan solve of ``a x = c``; the solution must be unique."""
    rows, cols = len(a), len(a[0]) if a else 0
    aug = [row[:] + [rhs] for row, rhs in zip(a, c)]
    pivots: list[int] = []
    r = 0
    for col in range(cols):
        piv = next((i for i in range(r, rows) if aug[i][col] != 0), None)
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        pv = aug[r][col]
        aug[r] = [x / pv for x in aug[r]]
        for i in range(rows):
            if i != r and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[r])]
        pivots.append(col)
        r += 1
    if any(all(x == 0 for x in row[:-1]) and row[-1] != 0 for row in aug):
        raise NetStructureError("inconsistent", code="NO_SEMIFLOW")
    if len(pivots) < cols:
        raise NetStructureError("not unique", code="SEMIFLOW_NOT_UNIQUE")
    x = [Fraction(0)] * cols
    for i, col in enumerate(pivots):
        x[col] = aug[i][-1]
    return x


def resource_semiflow(net: PetriNet, r: str) -> SemiFlow:
    """Solve ``I @ N = 0`` for the resource ``r`` with ``I(r) = 1``.

    Idle places and the other resources are pinned to zero, so the unknowns
    are the operation (and recovery) places.  The solution is unique in
    S4PR nets.

    Raises
    ------
    NetStructureError
        If ``r`` is not conservative, i.e. no non-negative integer
        solution exists.
    """
    if net.place(r).role != "resource":
        raise ArgumentError(f"{r!r} is not a resource place", code="NOT_RESOURCE")
    n = incidence_matrix(net)
    unknowns = [p.id for p in net.places if p.role in ("operation", "recovery")]
    idx = net.place_index
    a = [[Fraction(int(n[idx[p], j])) for p in unknowns] for j in range(n.shape[1])]
    c = [Fraction(-int(n[idx[r], j])) for j in range(n.shape[1])]
    if unknowns:
        try:
            x = _solve_unique(a, c)
        except NetStructureError as exc:
            raise NetStructureError(
                f"resource {r!r} has no unique P-semiflow ({exc})", code=exc.code
            ) from None
    else:
        if any(v != 0 for v in c):
            raise NetStructureError(f"resource {r!r} is not conservative", code="NO_SEMIFLOW")
        x = []
    if any(v < 0 or v.denominator != 1 for v in x):
        raise NetStructureError(
            f"resource {r!r} has no non-negative integer P-semiflow", code="NO_SEMIFLOW"
        )
    weights = {p: int(v) for p, v in zip(unknowns, x) if v}
    weights[r] = 1
    ordered = tuple((p.id, weights[p.id]) for p in net.places if p.id in weights)
    return SemiFlow(r, ordered)


def _reaches_all(start: str, succ: Mapping[str, set[str]], nodes: set[str]) -> bool:
    seen = {start}
    stack = [start]
    while stack:
        for v in succ.get(stack.pop(), ()):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return nodes <= seen


def _has_cycle(nodes: set[str], succ: Mapping[str, set[str]]) -> bool:
    state: dict[str, int] = {}
    for root in nodes:
        if root in state:
            continue
        stack = [(root, iter(succ.get(root, ())))]
        state[root] = 1
        while stack:
            v, it = stack[-1]
            w = next((w for w in it if w in nodes), None)
            if w is None:
                state[v] = 2
                stack.pop()
            elif state.get(w) == 1:
                return True
            elif w not in state:
                state[w] = 1
                stack.append((w, iter(succ.get(w, ()))))
    return False


def validate_s4pr(net: PetriNet, s: S4prStructure) -> list[Diagnostic]:
    """Check the S4PR class conditions; an empty list means the net conforms."""
    diags: list[Diagnostic] = []
    subnets = s.subnets

    owner: dict[str, int] = {}
    for i in subnets:
        for p in sorted(s.operation_places.get(i, ())):
            if p in owner:
                diags.append(Diagnostic(
                    "SHARED_OPERATION_PLACE",
                    f"operation place {p} belongs to subnets {owner[p]} and {i}",
                ))
            else:
                owner[p] = i
    t_owner: dict[str, int] = {}
    for i in subnets:
        for t in sorted(s.transitions.get(i, ())):
            if t in t_owner:
                diags.append(Diagnostic(
                    "SHARED_TRANSITION", f"transition {t} belongs to subnets {t_owner[t]} and {i}"
                ))
            else:
                t_owner[t] = i

    for i in subnets:
        if i not in s.idle_places:
            diags.append(Diagnostic("MISSING_IDLE", f"subnet {i} has no idle place"))
        if not s.operation_places.get(i):
            diags.append(Diagnostic("EMPTY_SUBNET", f"subnet {i} has no operation places"))
        if not s.transitions.get(i):
            diags.append(Diagnostic("EMPTY_SUBNET", f"subnet {i} has no transitions"))

    for r in sorted(s.unreliable):
        if r not in s.resource_places:
            diags.append(Diagnostic(
                "RESOURCE_PARTITION", f"unreliable place {r} is not a resource place"
            ))

    process_places = {p: i for i, p in s.idle_places.items()}
    for p, i in owner.items():
        process_places.setdefault(p, i)

    for i in subnets:
        idle = s.idle_places.get(i)
        local = set(s.operation_places.get(i, ())) | ({idle} if idle else set())
        succ: dict[str, set[str]] = {}
        machine = True
        for t in sorted(s.transitions.get(i, ())):
            if t not in net.transition_index:
                diags.append(Diagnostic("UNKNOWN_NODE", f"subnet {i} lists unknown transition {t}"))
                continue
            ins = {p: w for p, w in net.preset(t).items() if p in process_places}
            outs = {p: w for p, w in net.postset(t).items() if p in process_places}
            if any(p not in local for p in (*ins, *outs)):
                machine = False
                diags.append(Diagnostic(
                    "NOT_STATE_MACHINE", f"transition {t} of subnet {i} touches another subnet's places"
                ))
            if len(ins) != 1 or len(outs) != 1 or set(ins.values()) | set(outs.values()) != {1}:
                machine = False
                diags.append(Diagnostic(
                    "NOT_STATE_MACHINE",
                    f"transition {t} of subnet {i} is not a state machine "
                    f"(inputs {sorted(ins)}, outputs {sorted(outs)})",
                ))
                continue
            (src,), (dst,) = ins, outs
            succ.setdefault(src, set()).add(dst)
        if idle and local and machine:
            if not _reaches_all(idle, succ, local) or not all(
                _reaches_all(p, succ, {idle}) for p in local
            ):
                diags.append(Diagnostic(
                    "NOT_STRONGLY_CONNECTED", f"subnet {i} is not strongly connected"
                ))
            if _has_cycle(local - {idle}, succ):
                diags.append(Diagnostic(
                    "CYCLE_AVOIDS_IDLE", f"subnet {i} has a cycle that avoids idle place {idle}"
                ))

    idle_set = set(s.idle_places.values())
    for r in s.resource_places:
        flow = s.semiflows.get(r)
        if flow is None:
            try:
                flow = resource_semiflow(net, r)
            except NetStructureError as exc:
                diags.append(Diagnostic(exc.code, str(exc)))
                continue
        support = flow.support
        if support & set(s.resource_places) != {r} or flow[r] != 1:
            diags.append(Diagnostic("BAD_SEMIFLOW", f"semiflow of {r} covers other resources"))
        if support & idle_set:
            diags.append(Diagnostic("BAD_SEMIFLOW", f"semiflow of {r} covers an idle place"))
        if not support & s.all_operation_places:
            diags.append(Diagnostic("BAD_SEMIFLOW", f"resource {r} is used by no operation place"))
    return diags


def check_initial_marking(net: PetriNet, s: S4prStructure, m0: Marking) -> list[Diagnostic]:
    """Idle places marked, operation places empty, resources hold enough units."""
    m0 = check_marking(net, m0)
    idx = net.place_index
    diags = []
    for i, p in sorted(s.idle_places.items()):
        if m0[idx[p]] <= 0:
            diags.append(Diagnostic("IDLE_UNMARKED", f"idle place {p} of subnet {i} is empty"))
    for p in net.place_ids:
        if p in s.all_operation_places and m0[idx[p]] != 0:
            diags.append(Diagnostic(
                "OPERATION_MARKED", f"operation place {p} initially marked with {m0[idx[p]]}"
            ))
    for r in s.resource_places:
        flow = s.semiflows.get(r)
        if flow is None:
            continue
        need = max((flow[p] for p in s.all_operation_places), default=0)
        if m0[idx[r]] < need:
            diags.append(Diagnostic(
                "RESOURCE_CAPACITY",
                f"resource {r} holds {m0[idx[r]]} units but an operation needs {need}",
            ))
    return diags


def independent_subnets(s: S4prStructure, r: str) -> set[int]:
    """Subnets none of whose operation places hold units of ``r``."""
    if r not in s.unreliable:
        raise ArgumentError(f"{r!r} is not an unreliable resource", code="NOT_UNRELIABLE")
    support = s.semiflow(r).support
    return {i for i in s.subnets if not s.operation_places.get(i, frozenset()) & support}


def dependent_subnets(s: S4prStructure, r: str) -> set[int]:
    return set(s.subnets) - independent_subnets(s, r)


def conservation_values(net: PetriNet, s: S4prStructure, m: Marking) -> dict[str, int]:
    """Invariant quantities at ``m``: one per resource semiflow, one per subnet."""
    idx = net.place_index
    out = {f"I[{r}]": flow.value(net, m) for r, flow in s.semiflows.items()}
    for i in s.subnets:
        places = set(s.operation_places.get(i, ()))
        if i in s.idle_places:
            places.add(s.idle_places[i])
        out[f"subnet[{i}]"] = sum(m[idx[p]] for p in places if p in idx)
    return out


def semiflow_matrix(net: PetriNet, s: S4prStructure) -> np.ndarray:
    """Rows are resource semiflows over the net's places, in resource order."""
    rows = np.zeros((len(s.semiflows), len(net.places)), dtype=np.int64)
    for k, r in enumerate(sorted(s.semiflows, key=net.place_index.get)):
        for p, w in s.semiflows[r].weights:
            rows[k, net.place_index[p]] = w
    return rows
