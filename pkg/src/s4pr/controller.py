"""Multi-model robust controller for one unreliable resource.

The plant is extended with a recovery subnet ``r -> t_f -> q -> t_r -> r``
whose transitions are uncontrollable.  The number of units under repair,
``m(q) = j``, selects the active control structure:

* ``j = 0``: the plain plant (model 0);
* ``0 < j < n``: GMEC monitors synthesised for the partially failed plant;
* ``j = n``: inhibitor arcs from ``q`` that stop new parts entering the
  subnets which depend on ``r``.

The simulator swaps these structures as failures and repairs happen.
Monitors are (re)initialised from the marking at switch time.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

from .errors import (
    ArgumentError,
    InadmissibleMarkingError,
    ScenarioError,
)
from .gmec import (
    Candidate,
    SupervisorPlan,
    enumerate_separators,
    select_minimal_cover,
)
from .net import (
    Arc,
    Gmec,
    Marking,
    PetriNet,
    Place,
    Transition,
    add_monitor,
    check_marking,
    fire,
    incidence_matrix,
    is_enabled,
)
from .reachability import DEFAULT_NODE_CAP, ReachabilityGraph, build_graph
from .robustness import (
    Classification,
    ReducedSets,
    classify,
    forbidden_set,
    reduce,
    select_projection_places,
)
from .structure import S4prStructure, dependent_subnets, independent_subnets


@dataclass(frozen=True)
class RecoverySubnet:
    resource: str
    recovery_place: str
    fail_transition: str
    repair_transition: str


def attach_recovery(
    net: PetriNet, r: str, *, q: str = "q", t_f: str = "t_f", t_r: str = "t_r"
) -> tuple[PetriNet, RecoverySubnet]:
    """Append the recovery place and the two uncontrollable transitions for ``r``.

    Markings of the returned net are the original markings followed by the
    token count of ``q``.
    """
    place = net.place(r)
    if not place.unreliable:
        raise ArgumentError(f"{r!r} is not an unreliable resource", code="NOT_UNRELIABLE")
    if net.places_with_role("recovery"):
        raise ArgumentError("the net already has a recovery subnet", code="RECOVERY_PRESENT")
    rec = RecoverySubnet(r, q, t_f, t_r)
    out = net.extend(
        places=[Place(q, role="recovery")],
        transitions=[Transition(t_f, controllable=False), Transition(t_r, controllable=False)],
        arcs=[Arc(r, t_f), Arc(t_f, q), Arc(q, t_r), Arc(t_r, r)],
    )
    return out, rec


def entry_transitions(net: PetriNet, s: S4prStructure, subnets: Iterable[int]) -> list[str]:
    """Transitions that take a part out of the idle place of each given subnet."""
    out: list[str] = []
    for i in sorted(subnets):
        idle = s.idle_places.get(i)
        if idle is not None:
            out += [t for t in net.consumers(idle) if t not in out]
    return out


def build_model_n(base: PetriNet, rec: RecoverySubnet, s: S4prStructure, n: int) -> PetriNet:
    """Inhibit entry into every subnet that uses the resource once ``m(q) >= n``."""
    if n < 1:
        raise ArgumentError(f"capacity must be positive, got {n}")
    targets = entry_transitions(base, s, dependent_subnets(s, rec.resource))
    return base.extend(arcs=[Arc(rec.recovery_place, t, n, "inhibitor") for t in targets])


@dataclass
class SynthesisResult:
    j: int
    forbidden: frozenset
    projection_places: tuple[str, ...]
    reduced: ReducedSets | None
    candidates: list[Candidate]
    plan: SupervisorPlan


@dataclass
class Pipeline:
    """Shared state for synthesising every partial-failure model of one resource."""

    net: PetriNet
    structure: S4prStructure
    m0: Marking
    resource: str
    policy: str = "full"
    a_max: int | None = None
    b_max: int | None = None
    node_cap: int = DEFAULT_NODE_CAP

    def __post_init__(self) -> None:
        self.m0 = check_marking(self.net, self.m0)
        if self.resource not in self.structure.unreliable:
            raise ArgumentError(
                f"{self.resource!r} is not an unreliable resource", code="NOT_UNRELIABLE"
            )

    @property
    def capacity(self) -> int:
        return self.m0[self.net.place_index[self.resource]]

    @cached_property
    def graph(self) -> ReachabilityGraph:
        return build_graph(self.net, self.m0, self.node_cap)

    @cached_property
    def classification(self) -> Classification:
        return classify(self.net, self.structure, self.graph, self.resource, self.node_cap)

    def run(self, j: int) -> SynthesisResult:
        n = self.capacity
        if j < 1:
            raise ArgumentError("model 0 is the uncontrolled plant; j must be at least 1")
        if j >= n:
            raise ArgumentError(
                f"j = {j} leaves no unit of {self.resource}; use the inhibitor model", code="USE_MODEL_N"
            )
        c = self.classification
        forbidden = forbidden_set(c, self.resource, j, self.policy)
        if not forbidden:
            return SynthesisResult(j, forbidden, (), None, [], select_minimal_cover([], []))
        pe = select_projection_places(self.net, self.structure, c, self.resource)
        rs = reduce(self.net, c.robust, forbidden, pe)
        cands = enumerate_separators(rs, self.a_max, self.b_max)
        plan = select_minimal_cover(cands, rs.forbidden_reduced)
        return SynthesisResult(j, forbidden, tuple(pe), rs, cands, plan)


def build_model_j(
    base: PetriNet, rec: RecoverySubnet, s: S4prStructure, j: int, context: Pipeline
) -> SupervisorPlan:
    """Monitor plan for the model with ``j`` failed units."""
    if rec.resource != context.resource:
        raise ArgumentError("recovery subnet and pipeline concern different resources")
    return context.run(j).plan


@dataclass
class MultiModelController:
    original: PetriNet
    structure: S4prStructure
    base: PetriNet
    recovery: RecoverySubnet
    capacity: int
    plans: dict[int, SupervisorPlan]
    model_n: PetriNet
    robust: frozenset

    def monitor_rows(self, j: int) -> list[tuple[Gmec, dict[str, int]]]:
        """Active constraints of model ``j`` with their incidence rows on ``base``."""
        plan = self.plans.get(j)
        if plan is None:
            return []
        n = incidence_matrix(self.base)
        rows = []
        for g in plan.constraints:
            row = -(g.vector(self.base) @ n)
            rows.append((g, {t: int(v) for t, v in zip(self.base.transition_ids, row) if v}))
        return rows

    def model(self, j: int, m: Marking) -> tuple[PetriNet, Marking]:
        """Stand-alone net of model ``j`` with monitors initialised from ``m``."""
        m = check_marking(self.base, m)
        if j == 0:
            return self.base, m
        if j >= self.capacity:
            return self.model_n, m
        net = self.base
        for g in self.plans[j].constraints:
            net, m = add_monitor(net, g, m)
        return net, m


def synthesize_controller(
    net: PetriNet,
    s: S4prStructure,
    m0: Marking,
    r: str,
    *,
    policy: str = "full",
    a_max: int | None = None,
    b_max: int | None = None,
    node_cap: int = DEFAULT_NODE_CAP,
) -> MultiModelController:
    ctx = Pipeline(net, s, m0, r, policy, a_max, b_max, node_cap)
    base, rec = attach_recovery(net, r)
    n = ctx.capacity
    plans = {j: build_model_j(base, rec, s, j, ctx) for j in range(1, n)}
    return MultiModelController(
        original=net,
        structure=s,
        base=base,
        recovery=rec,
        capacity=n,
        plans=plans,
        model_n=build_model_n(base, rec, s, n),
        robust=ctx.classification.robust,
    )


# -- simulation ---------------------------------------------------------------

EVENTS = ("FIRE", "FAIL", "REPAIR", "AUTO")


@dataclass(frozen=True)
class Event:
    kind: str
    transition: str | None = None
    count: int = 1
    seed: int | None = None

    @classmethod
    def from_dict(cls, d: Mapping) -> Event:
        if not isinstance(d, Mapping) or "event" not in d:
            raise ScenarioError(f"scenario entry {d!r} has no 'event' field")
        kind = str(d["event"]).upper()
        if kind not in EVENTS:
            raise ScenarioError(f"unknown scenario event {d['event']!r}")
        if kind == "FIRE" and not d.get("transition"):
            raise ScenarioError("FIRE needs a 'transition'")
        count = d.get("count", 1)
        if not isinstance(count, int) or count < 0:
            raise ScenarioError(f"AUTO count must be a non-negative integer, got {count!r}")
        seed = d.get("seed")
        if seed is not None and not isinstance(seed, int):
            raise ScenarioError(f"seed must be an integer, got {seed!r}")
        return cls(kind, d.get("transition"), count, seed)

    def to_dict(self) -> dict:
        d: dict = {"event": self.kind}
        if self.kind == "FIRE":
            d["transition"] = self.transition
        if self.kind == "AUTO":
            d["count"] = self.count
            if self.seed is not None:
                d["seed"] = self.seed
        return d


@dataclass(frozen=True)
class FailureScenario:
    steps: tuple[Event, ...]
    seed: int = 0

    @classmethod
    def from_json(cls, data, seed: int = 0) -> FailureScenario:
        if not isinstance(data, list):
            raise ScenarioError("a scenario is a JSON list of event objects")
        return cls(tuple(Event.from_dict(d) for d in data), seed)

    @classmethod
    def of(cls, *steps: str | Event | tuple, seed: int = 0) -> FailureScenario:
        """Shorthand: ``of("FAIL", ("FIRE", "t8"), ("AUTO", 20, 7))``."""
        events = []
        for st in steps:
            if isinstance(st, Event):
                events.append(st)
            elif isinstance(st, str):
                events.append(Event(st.upper()))
            elif st[0].upper() == "FIRE":
                events.append(Event("FIRE", transition=st[1]))
            elif st[0].upper() == "AUTO":
                events.append(Event("AUTO", count=st[1], seed=st[2] if len(st) > 2 else None))
            else:
                raise ScenarioError(f"cannot read scenario step {st!r}")
        return cls(tuple(events), seed)


@dataclass(frozen=True)
class TraceStep:
    step: int
    event: str
    transition: str | None
    model: int
    marking: Marking
    monitors: tuple[int, ...]
    accepted: bool
    reason: str | None = None


@dataclass
class Trace:
    places: tuple[str, ...]
    initial: Marking
    steps: list[TraceStep] = field(default_factory=list)

    @property
    def final(self) -> Marking:
        return self.steps[-1].marking if self.steps else self.initial

    @property
    def model(self) -> int:
        return self.steps[-1].model if self.steps else 0

    @property
    def rejected(self) -> list[TraceStep]:
        return [s for s in self.steps if not s.accepted]

    def fired(self, model: int | None = None) -> list[str]:
        return [
            s.transition for s in self.steps
            if s.accepted and s.transition and (model is None or s.model == model)
        ]

    def markings(self) -> list[Marking]:
        return [self.initial] + [s.marking for s in self.steps if s.accepted]


class _Simulator:
    def __init__(self, mmc: MultiModelController, m0: Marking, seed: int) -> None:
        self.mmc = mmc
        base = mmc.base
        if len(m0) == len(mmc.original.places):
            m0 = tuple(m0) + (0,)
        self.m = check_marking(base, m0)
        self.r = base.place_index[mmc.recovery.resource]
        self.q = base.place_index[mmc.recovery.recovery_place]
        self.k = len(mmc.original.places)
        self.seed = seed
        self.rows = {j: mmc.monitor_rows(j) for j in mmc.plans}
        self.controllable = [t.id for t in base.transitions if t.controllable]
        self.tokens: tuple[int, ...] = ()
        self.j = self.m[self.q]
        self.tokens = self._instantiate(self.j, self.m)
        if self.tokens is None:
            raise InadmissibleMarkingError(f"initial marking is inadmissible for model {self.j}")
        self.trace = Trace(base.place_ids, self.m)

    def restored(self, m: Marking) -> Marking:
        """Original-net marking with units under repair counted as idle."""
        out = list(m[: self.k])
        out[self.r] += m[self.q]
        return tuple(out)

    def _instantiate(self, j: int, m: Marking):
        tokens = tuple(g.bound - g.value(self.mmc.base, m) for g, _ in self.rows.get(j, []))
        return None if any(t < 0 for t in tokens) else tokens

    def allowed(self, t: str) -> str | None:
        """Reason ``t`` cannot fire under the active model, or None."""
        if not is_enabled(self.mmc.base, self.m, t):
            return "not enabled"
        if not is_enabled(self.mmc.model_n, self.m, t):
            return "inhibited"
        for (g, row), tok in zip(self.rows.get(self.j, []), self.tokens):
            if tok + row.get(t, 0) < 0:
                return f"blocked by monitor {g}"
        return None

    def _fire(self, t: str) -> None:
        self.m = fire(self.mmc.base, self.m, t)
        self.tokens = tuple(
            tok + row.get(t, 0) for (g, row), tok in zip(self.rows.get(self.j, []), self.tokens)
        )

    def record(self, event: str, t: str | None, ok: bool, reason: str | None = None) -> None:
        self.trace.steps.append(
            TraceStep(len(self.trace.steps), event, t, self.j, self.m, self.tokens, ok, reason)
        )

    def switch(self, t: str, event: str) -> None:
        m_next = self._peek(t)
        j_next = m_next[self.q]
        tokens = self._instantiate(j_next, m_next)
        if tokens is None:
            if event == "FAIL":
                self.record(event, None, False, f"marking inadmissible for model {j_next}")
                return
            raise InadmissibleMarkingError(
                f"repair leads to a marking outside model {j_next}: {m_next}"
            )
        self.m, self.j, self.tokens = m_next, j_next, tokens
        self.record(event, t, True)

    def _peek(self, t: str) -> Marking:
        return fire(self.mmc.base, self.m, t)

    def run(self, sc: FailureScenario) -> Trace:
        rec = self.mmc.recovery
        for n_event, ev in enumerate(sc.steps):
            if ev.kind == "FIRE":
                t = ev.transition
                if t not in self.mmc.base.transition_index:
                    raise ScenarioError(f"unknown transition {t!r}")
                if t in (rec.fail_transition, rec.repair_transition):
                    raise ScenarioError(f"{t} is uncontrollable; use FAIL/REPAIR events")
                why = self.allowed(t)
                if why:
                    self.record("FIRE", t, False, why)
                else:
                    self._fire(t)
                    self.record("FIRE", t, True)
            elif ev.kind == "FAIL":
                if self.m[self.r] < 1:
                    self.record("FAIL", None, False, "no idle unit can fail")
                elif self.restored(self.m) not in self.mmc.robust:
                    self.record("FAIL", None, False, "failure in a non-robust marking")
                else:
                    self.switch(rec.fail_transition, "FAIL")
            elif ev.kind == "REPAIR":
                if self.m[self.q] < 1:
                    self.record("REPAIR", None, False, "no unit under repair")
                else:
                    self.switch(rec.repair_transition, "REPAIR")
            else:
                seed = ev.seed if ev.seed is not None else self.seed * 1_000_003 + n_event
                rng = random.Random(seed)
                for _ in range(ev.count):
                    choices = [t for t in self.controllable if self.allowed(t) is None]
                    if not choices:
                        self.record("AUTO", None, False, "no controllable transition can fire")
                        break
                    t = rng.choice(choices)
                    self._fire(t)
                    self.record("AUTO", t, True)
        return self.trace


def simulate(mmc: MultiModelController, m0: Marking, sc: FailureScenario) -> Trace:
    """Replay ``sc`` from ``m0`` under the multi-model controller.

    ``m0`` may be given over the original places (``q`` starts empty) or
    over the places of ``mmc.base``.  Illegal events are recorded as
    rejected steps; malformed scenarios raise :class:`ScenarioError`.
    """
    return _Simulator(mmc, m0, sc.seed).run(sc)


def independent_activity(trace: Trace, mmc: MultiModelController) -> dict[str, dict[int, int]]:
    """Firing counts of independent-subnet transitions, per active model."""
    s = mmc.structure
    ts = sorted(
        set().union(*(s.transitions.get(i, frozenset()) for i in independent_subnets(s, mmc.recovery.resource))),
        key=mmc.base.transition_index.get,
    )
    counts: dict[str, dict[int, int]] = {t: {} for t in ts}
    for st in trace.steps:
        if st.accepted and st.transition in counts:
            counts[st.transition][st.model] = counts[st.transition].get(st.model, 0) + 1
    return counts
