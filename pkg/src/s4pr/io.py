"""Net documents (JSON), bundled fixtures and Graphviz export."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import NetStructureError, ParseError
from .net import Arc, Gmec, Marking, PetriNet, Place, Transition, check_marking, enabled_transitions
from .reachability import ReachabilityGraph
from .structure import S4prStructure, structure_from_net

FIXTURES = ("case_study",)


@dataclass(frozen=True)
class NetDocument:
    net: PetriNet
    m0: Marking

    @property
    def unreliable(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.net.places if p.unreliable)

    def structure(self) -> S4prStructure:
        return structure_from_net(self.net)

    def with_marking(self, **overrides: int) -> NetDocument:
        m = self.net.as_dict(self.m0)
        for p, k in overrides.items():
            if p not in m:
                raise NetStructureError(f"unknown place {p!r} in marking override", code="UNKNOWN_NODE")
            m[p] = k
        return NetDocument(self.net, self.net.marking(m))


def _field(obj, key, kind, where, default=...):
    if not isinstance(obj, dict):
        raise ParseError(f"{where} must be an object")
    if key not in obj:
        if default is ...:
            raise ParseError(f"{where} is missing {key!r}")
        return default
    val = obj[key]
    if kind is int and isinstance(val, bool) or not isinstance(val, kind):
        raise ParseError(f"{where}.{key} has the wrong type ({type(val).__name__})")
    return val


def from_dict(data) -> NetDocument:
    if not isinstance(data, dict):
        raise ParseError("a net document is a JSON object")
    for key in ("places", "transitions", "arcs"):
        if not isinstance(data.get(key), list):
            raise ParseError(f"{key!r} must be a list")
    unreliable = data.get("unreliable", [])
    if not isinstance(unreliable, list) or not all(isinstance(u, str) for u in unreliable):
        raise ParseError("'unreliable' must be a list of place ids")
    places, tokens = [], []
    for k, d in enumerate(data["places"]):
        where = f"places[{k}]"
        pid = _field(d, "id", str, where)
        places.append(Place(
            pid,
            role=_field(d, "role", str, where, "operation"),
            subnet=_field(d, "subnet", int, where, 0),
            unreliable=pid in unreliable,
        ))
        tokens.append(_field(d, "tokens", int, where, 0))
    transitions = [
        Transition(
            _field(d, "id", str, f"transitions[{k}]"),
            subnet=_field(d, "subnet", int, f"transitions[{k}]", 0),
            controllable=_field(d, "controllable", bool, f"transitions[{k}]", True),
        )
        for k, d in enumerate(data["transitions"])
    ]
    arcs = [
        Arc(
            _field(d, "from", str, f"arcs[{k}]"),
            _field(d, "to", str, f"arcs[{k}]"),
            _field(d, "weight", int, f"arcs[{k}]", 1),
            _field(d, "kind", str, f"arcs[{k}]", "normal"),
        )
        for k, d in enumerate(data["arcs"])
    ]
    monitors = []
    for k, d in enumerate(data.get("monitors", [])):
        where = f"monitors[{k}]"
        weights = _field(d, "weights", dict, where)
        monitors.append((_field(d, "place", str, where), Gmec.of(weights, _field(d, "bound", int, where))))
    known = {p.id for p in places}
    missing = [u for u in unreliable if u not in known]
    if missing:
        raise NetStructureError(f"unreliable ids {missing} are not places", code="UNKNOWN_NODE")
    net = PetriNet(places, transitions, arcs, monitors)
    return NetDocument(net, check_marking(net, tokens))


def to_dict(doc: NetDocument) -> dict:
    net = doc.net
    out = {
        "places": [
            {"id": p.id, "role": p.role, "subnet": p.subnet, "tokens": k}
            for p, k in zip(net.places, doc.m0)
        ],
        "transitions": [
            {"id": t.id, "subnet": t.subnet, "controllable": t.controllable}
            for t in net.transitions
        ],
        "arcs": [
            {"from": a.source, "to": a.target, "weight": a.weight, "kind": a.kind}
            for a in net.arcs
        ],
        "unreliable": list(doc.unreliable),
    }
    if net.monitors:
        out["monitors"] = [
            {"place": pid, "weights": g.as_dict(), "bound": g.bound} for pid, g in net.monitors
        ]
    return out


def loads(text: str) -> NetDocument:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    return from_dict(data)


def dumps(doc: NetDocument) -> str:
    return json.dumps(to_dict(doc), indent=2) + "\n"


def load(path: str | Path) -> NetDocument:
    """Read a net file; a bare fixture name (``case_study``) loads the bundled copy."""
    p = Path(path)
    if not p.exists() and p.stem in FIXTURES and p.parent == Path("."):
        return fixture(p.stem)
    try:
        text = p.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    return loads(text)


def fixture_text(name: str = "case_study") -> str:
    if name not in FIXTURES:
        raise ParseError(f"no bundled fixture {name!r}")
    return resources.files("s4pr.data").joinpath(f"{name}.net").read_text(encoding="utf-8")


def fixture(name: str = "case_study") -> NetDocument:
    return loads(fixture_text(name))


def case_study() -> NetDocument:
    """Three production lines sharing resources p10, p11 and the unreliable p12."""
    return fixture("case_study")


def fmt_marking(m: Marking) -> str:
    return "(" + ",".join(map(str, m)) + ")"


def to_dot(g: ReachabilityGraph, net: PetriNet, name: str = "reachability") -> str:
    """Graphviz source; deadlock nodes are drawn as red octagons."""
    lines = [f"digraph {name} {{", '  node [shape=ellipse, fontname="monospace"];']
    for i, m in enumerate(g.nodes):
        attrs = [f'label="{fmt_marking(m)}"']
        if not enabled_transitions(net, m):
            attrs += ["shape=octagon", "color=red"]
        if i == 0:
            attrs.append("penwidth=2")
        lines.append(f"  n{i} [{', '.join(attrs)}];")
    for a, t, b in g.edges:
        lines.append(f'  n{a} -> n{b} [label="{t}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
