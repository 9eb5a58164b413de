"""Place/transition net kernel.

Nets are immutable values.  A marking is a plain tuple of non-negative
integers laid out in the net's place order, which is fixed at construction
and used as the canonical vector order everywhere (incidence matrices,
reports, projections).

Arcs come in two kinds.  Normal arcs move tokens.  Inhibitor arcs run from a
place to a transition and act as a disabling threshold: ``t`` is disabled
while ``m(p) >= weight``.  They never move tokens and contribute nothing to
the incidence matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    ArgumentError,
    ControllabilityError,
    InadmissibleMarkingError,
    MarkingError,
    NetStructureError,
    NotEnabledError,
)

ROLES = ("idle", "operation", "resource", "recovery", "monitor")
ARC_KINDS = ("normal", "inhibitor")

Marking = tuple  # tuple[int, ...] in place order


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


@dataclass(frozen=True)
class Place:
    id: str
    role: str = "operation"
    subnet: int = 0
    unreliable: bool = False


@dataclass(frozen=True)
class Transition:
    id: str
    subnet: int = 0
    controllable: bool = True


@dataclass(frozen=True)
class Arc:
    source: str
    target: str
    weight: int = 1
    kind: str = "normal"


@dataclass(frozen=True)
class Gmec:
    """Linear constraint ``sum_p l(p) * m(p) <= bound`` with ``l >= 0``.

    ``weights`` holds ``(place, coefficient)`` pairs with zero coefficients
    dropped; use :meth:`of` to build one from a mapping.
    """

    weights: tuple[tuple[str, int], ...]
    bound: int

    @classmethod
    def of(cls, weights: Mapping[str, int] | Iterable[tuple[str, int]], bound: int) -> Gmec:
        items = weights.items() if isinstance(weights, Mapping) else weights
        pairs = []
        for p, w in items:
            w = int(w)
            if w < 0:
                raise ArgumentError(f"negative GMEC weight {w} on {p}")
            if w:
                pairs.append((str(p), w))
        if int(bound) < 0:
            raise ArgumentError(f"negative GMEC bound {bound}")
        return cls(tuple(pairs), int(bound))

    def weight(self, place: str) -> int:
        return dict(self.weights).get(place, 0)

    def as_dict(self) -> dict[str, int]:
        return dict(self.weights)

    def vector(self, net: PetriNet) -> np.ndarray:
        """Coefficient vector over ``net``'s places."""
        vec = np.zeros(len(net.places), dtype=np.int64)
        for p, w in self.weights:
            if p not in net.place_index:
                raise ArgumentError(f"GMEC weight on unknown place {p!r}")
            vec[net.place_index[p]] = w
        return vec

    def value(self, net: PetriNet, m: Marking) -> int:
        idx = net.place_index
        return sum(w * m[idx[p]] for p, w in self.weights)

    def __str__(self) -> str:
        terms = " + ".join(p if w == 1 else f"{w}*{p}" for p, w in self.weights) or "0"
        return f"{terms} <= {self.bound}"


def validate_net(
    places: Sequence[Place], transitions: Sequence[Transition], arcs: Sequence[Arc]
) -> list[Diagnostic]:
    """Structural checks on raw net components; empty list means well formed."""
    diags: list[Diagnostic] = []
    seen_p: set[str] = set()
    for p in places:
        if p.id in seen_p:
            diags.append(Diagnostic("DUP_PLACE", f"place {p.id!r} declared twice"))
        seen_p.add(p.id)
        if p.role not in ROLES:
            diags.append(Diagnostic("BAD_ROLE", f"place {p.id!r} has unknown role {p.role!r}"))
        if p.unreliable and p.role != "resource":
            diags.append(
                Diagnostic("BAD_ROLE", f"place {p.id!r} is marked unreliable but is not a resource")
            )
    seen_t: set[str] = set()
    for t in transitions:
        if t.id in seen_t:
            diags.append(Diagnostic("DUP_TRANSITION", f"transition {t.id!r} declared twice"))
        if t.id in seen_p:
            diags.append(Diagnostic("DUP_NODE", f"{t.id!r} is both a place and a transition"))
        seen_t.add(t.id)
    seen_a: set[tuple[str, str, str]] = set()
    for a in arcs:
        key = (a.source, a.target, a.kind)
        if key in seen_a:
            diags.append(Diagnostic("DUP_ARC", f"arc {a.source}->{a.target} ({a.kind}) declared twice"))
        seen_a.add(key)
        if a.kind not in ARC_KINDS:
            diags.append(Diagnostic("BAD_ARC_KIND", f"arc {a.source}->{a.target} has kind {a.kind!r}"))
        if not isinstance(a.weight, int) or a.weight < 1:
            diags.append(Diagnostic("BAD_WEIGHT", f"arc {a.source}->{a.target} has weight {a.weight!r}"))
        p_to_t = a.source in seen_p and a.target in seen_t
        t_to_p = a.source in seen_t and a.target in seen_p
        if not (p_to_t or t_to_p):
            diags.append(
                Diagnostic("BAD_ARC_ENDPOINT", f"arc {a.source}->{a.target} must join a place and a transition")
            )
        elif a.kind == "inhibitor" and not p_to_t:
            diags.append(
                Diagnostic("INHIBITOR_DIRECTION", f"inhibitor arc {a.source}->{a.target} must run place->transition")
            )
    return diags


@dataclass(frozen=True)
class PetriNet:
    places: tuple[Place, ...]
    transitions: tuple[Transition, ...]
    arcs: tuple[Arc, ...] = ()
    # monitor place id -> constraint it enforces
    monitors: tuple[tuple[str, Gmec], ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "places", tuple(self.places))
        object.__setattr__(self, "transitions", tuple(self.transitions))
        object.__setattr__(self, "arcs", tuple(self.arcs))
        object.__setattr__(self, "monitors", tuple(self.monitors))
        diags = validate_net(self.places, self.transitions, self.arcs)
        if diags:
            raise NetStructureError("; ".join(map(str, diags)), code=diags[0].code)

    # -- lookup -----------------------------------------------------------

    @cached_property
    def place_index(self) -> dict[str, int]:
        return {p.id: i for i, p in enumerate(self.places)}

    @cached_property
    def transition_index(self) -> dict[str, int]:
        return {t.id: j for j, t in enumerate(self.transitions)}

    @property
    def place_ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.places)

    @property
    def transition_ids(self) -> tuple[str, ...]:
        return tuple(t.id for t in self.transitions)

    def place(self, pid: str) -> Place:
        try:
            return self.places[self.place_index[pid]]
        except KeyError:
            raise ArgumentError(f"unknown place {pid!r}") from None

    def transition(self, tid: str) -> Transition:
        try:
            return self.transitions[self.transition_index[tid]]
        except KeyError:
            raise ArgumentError(f"unknown transition {tid!r}") from None

    def places_with_role(self, role: str) -> tuple[str, ...]:
        return tuple(p.id for p in self.places if p.role == role)

    def monitor_constraint(self, pid: str) -> Gmec:
        return dict(self.monitors)[pid]

    # -- arc tables, indexed by transition position -------------------------

    @cached_property
    def _tables(self):
        nt = len(self.transitions)
        pre: list[list[tuple[int, int]]] = [[] for _ in range(nt)]
        post: list[list[tuple[int, int]]] = [[] for _ in range(nt)]
        inhib: list[list[tuple[int, int]]] = [[] for _ in range(nt)]
        pi, ti = self.place_index, self.transition_index
        for a in self.arcs:
            if a.source in pi:
                target = inhib if a.kind == "inhibitor" else pre
                target[ti[a.target]].append((pi[a.source], a.weight))
            else:
                post[ti[a.source]].append((pi[a.target], a.weight))
        return pre, post, inhib

    def preset(self, tid: str) -> dict[str, int]:
        """Normal input places of ``tid`` with their weights."""
        pre = self._tables[0][self.transition_index[tid]]
        return {self.places[i].id: w for i, w in pre}

    def postset(self, tid: str) -> dict[str, int]:
        post = self._tables[1][self.transition_index[tid]]
        return {self.places[i].id: w for i, w in post}

    def inhibitors(self, tid: str) -> dict[str, int]:
        inhib = self._tables[2][self.transition_index[tid]]
        return {self.places[i].id: w for i, w in inhib}

    def consumers(self, pid: str) -> tuple[str, ...]:
        """Transitions with a normal input arc from ``pid``, in net order."""
        return tuple(
            t.id for t in self.transitions if pid in self.preset(t.id)
        )

    # -- markings -----------------------------------------------------------

    def marking(self, tokens: Mapping[str, int] | None = None, **kw: int) -> Marking:
        """Build a marking from sparse ``place -> count`` entries."""
        m = [0] * len(self.places)
        for p, k in {**(tokens or {}), **kw}.items():
            if p not in self.place_index:
                raise MarkingError(f"unknown place {p!r}")
            m[self.place_index[p]] = int(k)
        return check_marking(self, tuple(m))

    def as_dict(self, m: Marking, *, sparse: bool = False) -> dict[str, int]:
        return {p.id: k for p, k in zip(self.places, m) if k or not sparse}

    # -- construction -------------------------------------------------------

    def extend(
        self,
        places: Iterable[Place] = (),
        transitions: Iterable[Transition] = (),
        arcs: Iterable[Arc] = (),
        monitors: Iterable[tuple[str, Gmec]] = (),
    ) -> PetriNet:
        """Return a new net with the given elements appended."""
        return replace(
            self,
            places=self.places + tuple(places),
            transitions=self.transitions + tuple(transitions),
            arcs=self.arcs + tuple(arcs),
            monitors=self.monitors + tuple(monitors),
        )


def check_marking(net: PetriNet, m: Sequence[int]) -> Marking:
    if len(m) != len(net.places):
        raise MarkingError(
            f"marking has {len(m)} entries but the net has {len(net.places)} places"
        )
    m = tuple(int(k) for k in m)
    if any(k < 0 for k in m):
        raise MarkingError(f"negative token count in {m}")
    return m


def _enabled_index(net: PetriNet, m: Marking, j: int) -> bool:
    pre, _, inhib = net._tables
    return all(m[i] >= w for i, w in pre[j]) and all(m[i] < w for i, w in inhib[j])


def is_enabled(net: PetriNet, m: Marking, t: str) -> bool:
    if len(m) != len(net.places):
        check_marking(net, m)
    if t not in net.transition_index:
        raise ArgumentError(f"unknown transition {t!r}")
    return _enabled_index(net, m, net.transition_index[t])


def enabled_transitions(net: PetriNet, m: Marking) -> tuple[str, ...]:
    """Transitions enabled at ``m``, in net order."""
    if len(m) != len(net.places):
        check_marking(net, m)
    return tuple(
        t.id for j, t in enumerate(net.transitions) if _enabled_index(net, m, j)
    )


def _fire_index(net: PetriNet, m: Marking, j: int) -> Marking:
    pre, post, _ = net._tables
    out = list(m)
    for i, w in pre[j]:
        out[i] -= w
    for i, w in post[j]:
        out[i] += w
    return tuple(out)


def fire(net: PetriNet, m: Marking, t: str) -> Marking:
    """Fire ``t`` at ``m`` and return the successor marking."""
    if not is_enabled(net, m, t):
        raise NotEnabledError(f"transition {t!r} is not enabled at {m}")
    return _fire_index(net, m, net.transition_index[t])


def incidence_matrix(net: PetriNet) -> np.ndarray:
    """Integer post - pre matrix, rows are places and columns transitions."""
    n = np.zeros((len(net.places), len(net.transitions)), dtype=np.int64)
    pre, post, _ = net._tables
    for j in range(len(net.transitions)):
        for i, w in pre[j]:
            n[i, j] -= w
        for i, w in post[j]:
            n[i, j] += w
    return n


def _fresh_id(existing: Iterable[str], stem: str) -> str:
    taken = set(existing)
    k = 1
    while f"{stem}{k}" in taken:
        k += 1
    return f"{stem}{k}"


def add_monitor(
    net: PetriNet, g: Gmec, m_ref: Marking, name: str | None = None
) -> tuple[PetriNet, Marking]:
    """Enforce ``g`` with a monitor place.

    The monitor's incidence row is ``-l @ N`` so that ``l.m + m(pc) = b``
    becomes a place invariant; its tokens are ``b - l.m_ref``.

    Raises
    ------
    InadmissibleMarkingError
        If ``m_ref`` already violates the constraint.
    ControllabilityError
        If the monitor would need an input arc into an uncontrollable
        transition.
    """
    m_ref = check_marking(net, m_ref)
    l = g.vector(net)
    tokens = g.bound - int(l @ np.asarray(m_ref, dtype=np.int64))
    if tokens < 0:
        raise InadmissibleMarkingError(
            f"reference marking violates {g} (l.m = {g.bound - tokens})"
        )
    row = -(l @ incidence_matrix(net))
    for j, t in enumerate(net.transitions):
        if row[j] < 0 and not t.controllable:
            raise ControllabilityError(
                f"monitor for {g} would restrict uncontrollable transition {t.id!r}"
            )
    pid = name or _fresh_id(net.place_ids, "pc")
    arcs = []
    for j, t in enumerate(net.transitions):
        if row[j] < 0:
            arcs.append(Arc(pid, t.id, int(-row[j])))
        elif row[j] > 0:
            arcs.append(Arc(t.id, pid, int(row[j])))
    controlled = net.extend(
        places=[Place(pid, role="monitor")], arcs=arcs, monitors=[(pid, g)]
    )
    return controlled, tuple(m_ref) + (tokens,)
