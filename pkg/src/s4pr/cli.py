"""Command line front-end: ``s4pr validate|reach|classify|synthesize|simulate|export-dot``.

Reports are JSON on stdout with sorted keys.  Exit status is 0 on success,
1 for domain errors (invalid net, bad resource, unseparable sets, ...) and
2 for unreadable or malformed input.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

from . import __version__
from .controller import (
    FailureScenario,
    Pipeline,
    attach_recovery,
    build_model_n,
    independent_activity,
    simulate,
    synthesize_controller,
)
from .errors import ArgumentError, ParseError, S4prError
from .gmec import build_supervisor, verify_supervisor
from .io import NetDocument, fmt_marking, load, to_dot
from .net import incidence_matrix
from .reachability import DEFAULT_NODE_CAP, bounds, build_graph, deadlocks, liveness
from .robustness import classify
from .structure import check_initial_marking, structure_from_net, validate_s4pr


def _markings(ms) -> list[list[int]]:
    return [list(m) for m in sorted(ms)]


def _node_cap(args) -> int:
    if args.cap is not None:
        return args.cap
    env = os.environ.get("S4PR_NODE_CAP")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ArgumentError(f"S4PR_NODE_CAP must be an integer, got {env!r}") from None
    return DEFAULT_NODE_CAP


def _overrides(items) -> dict[str, int]:
    out = {}
    for item in items or []:
        for part in item.split(","):
            key, sep, val = part.partition("=")
            if not sep:
                raise ArgumentError(f"marking override {part!r} is not place=count")
            try:
                out[key.strip()] = int(val)
            except ValueError:
                raise ArgumentError(f"marking override {part!r} needs an integer count") from None
    return out


def _load(args) -> NetDocument:
    doc = load(args.path)
    over = _overrides(getattr(args, "override_marking", None))
    return doc.with_marking(**over) if over else doc


def _digest(args) -> str:
    h = hashlib.sha256()
    p = Path(args.path)
    if p.exists():
        h.update(p.read_bytes())
    else:
        h.update(args.path.encode())
    skip = {"func", "path"}
    for k, v in sorted(vars(args).items()):
        if k not in skip:
            h.update(f"{k}={v};".encode())
    return h.hexdigest()


def _report(args, results: dict) -> dict:
    return {
        "command": args.command,
        "inputs_digest": _digest(args),
        "results": results,
        "tool_version": __version__,
    }


def _resource(args, doc: NetDocument) -> str:
    if not doc.unreliable:
        raise ArgumentError("the net declares no unreliable resource", code="NO_UNRELIABLE")
    r = args.resource or doc.unreliable[0]
    if r not in doc.unreliable:
        raise ArgumentError(f"{r!r} is not an unreliable resource", code="NOT_UNRELIABLE")
    return r


def cmd_validate(args) -> tuple[int, dict]:
    doc = load(args.path)
    s = structure_from_net(doc.net)
    diags = validate_s4pr(doc.net, s) + check_initial_marking(doc.net, s, doc.m0)
    for d in diags:
        print(str(d), file=sys.stderr)
    res = {"diagnostics": [{"code": d.code, "message": d.message} for d in diags]}
    return (1 if diags else 0), res


def cmd_reach(args) -> tuple[int, dict]:
    doc = _load(args)
    g = build_graph(doc.net, doc.m0, _node_cap(args))
    dead = deadlocks(g, doc.net)
    live = liveness(g, doc.net)
    if args.dot:
        Path(args.dot).write_text(to_dot(g, doc.net), encoding="utf-8")
    res = {
        "places": list(g.places),
        "initial": list(doc.m0),
        "nodes": len(g),
        "edges": len(g.edges),
        "bounds": bounds(g),
        "deadlocks": _markings(dead),
        "liveness": live.live,
        "witnesses": {t: list(m) for t, m in sorted(live.witnesses.items())},
    }
    return 0, res


def cmd_classify(args) -> tuple[int, dict]:
    doc = _load(args)
    r = _resource(args, doc)
    s = structure_from_net(doc.net)
    cap = _node_cap(args)
    c = classify(doc.net, s, build_graph(doc.net, doc.m0, cap), r, cap)
    res = {
        "places": list(doc.net.place_ids),
        "resource": r,
        "robust_count": len(c.robust),
        "unrobust_count": len(c.unrobust),
        "robust": _markings(c.robust),
        "unrobust": _markings(c.unrobust),
    }
    return 0, res


def cmd_synthesize(args) -> tuple[int, dict]:
    doc = _load(args)
    r = _resource(args, doc)
    s = structure_from_net(doc.net)
    ctx = Pipeline(doc.net, s, doc.m0, r, args.policy, args.amax, args.bmax, _node_cap(args))
    out = ctx.run(args.j)
    plan = out.plan
    controlled, m_ctl = build_supervisor(doc.net, plan, doc.m0)
    report = verify_supervisor(controlled, m_ctl, ctx.classification.robust, out.forbidden, ctx.node_cap)
    n_ctl = incidence_matrix(controlled)
    monitors = []
    for k, (pid, g) in enumerate(controlled.monitors):
        row = n_ctl[controlled.place_index[pid]]
        monitors.append({
            "place": pid,
            "constraint": str(g),
            "row": {t: int(v) for t, v in zip(controlled.transition_ids, row) if v},
            "initial_tokens": m_ctl[controlled.place_index[pid]],
        })
    L, B = plan.matrices(doc.net)
    rs = out.reduced
    res = {
        "resource": r,
        "j": args.j,
        "policy": args.policy,
        "places": list(doc.net.place_ids),
        "forbidden_count": len(out.forbidden),
        "forbidden": _markings(out.forbidden),
        "projection_places": list(out.projection_places),
        "admissible_reduced": [list(v) for v in rs.admissible_reduced] if rs else [],
        "forbidden_reduced": [list(v) for v in rs.forbidden_reduced] if rs else [],
        "candidate_count": len(out.candidates),
        "plan": {
            "L": L.tolist(),
            "B": B.tolist(),
            "constraints": [str(g) for g in plan.constraints],
            "optimal": plan.optimal,
            "lower_bound": plan.lower_bound,
        },
        "monitors": monitors,
        "verification": {
            "ok": report.ok,
            "reachable_count": len(report.reachable),
            "forbidden_reached": _markings(report.forbidden_reached),
            "admissible_missing": _markings(report.admissible_missing),
            "invariant_violations": len(report.invariant_violations),
        },
    }
    return (0 if report.ok else 1), res


def cmd_simulate(args) -> tuple[int, dict]:
    doc = _load(args)
    r = _resource(args, doc)
    s = structure_from_net(doc.net)
    try:
        data = json.loads(Path(args.scenario).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ParseError(f"cannot read scenario {args.scenario}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    sc = FailureScenario.from_json(data, seed=args.seed)
    mmc = synthesize_controller(
        doc.net, s, doc.m0, r, policy=args.policy, node_cap=_node_cap(args)
    )
    trace = simulate(mmc, doc.m0, sc)
    rows = [
        {
            "step": st.step,
            "event": st.event,
            "transition": st.transition,
            "model": st.model,
            "marking": list(st.marking),
            "monitors": list(st.monitors),
            "accepted": st.accepted,
            "reason": st.reason,
        }
        for st in trace.steps
    ]
    if args.trace:
        Path(args.trace).write_text(
            json.dumps({"places": list(trace.places), "steps": rows}, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    activity = independent_activity(trace, mmc)
    res = {
        "places": list(trace.places),
        "events": len(sc.steps),
        "accepted": sum(st.accepted for st in trace.steps),
        "rejected": [
            {"step": st.step, "event": st.event, "reason": st.reason} for st in trace.rejected
        ],
        "final_model": trace.model,
        "final_marking": list(trace.final),
        "independent_activity": {t: {str(j): k for j, k in sorted(c.items())} for t, c in activity.items()},
        "independent_fired_during_failure": {
            t: sum(k for j, k in c.items() if j > 0) for t, c in activity.items()
        },
    }
    return 0, res


def cmd_export_dot(args) -> tuple[int, dict]:
    doc = _load(args)
    net, m0 = doc.net, doc.m0
    if args.model is not None:
        r = _resource(args, doc)
        s = structure_from_net(net)
        base, rec = attach_recovery(net, r)
        tokens = net.as_dict(m0)
        if not 0 <= args.model <= tokens[r]:
            raise ArgumentError(f"--model must lie in [0, {tokens[r]}]")
        net = build_model_n(base, rec, s, tokens[r])
        tokens[r] -= args.model
        tokens[rec.recovery_place] = args.model
        m0 = net.marking(tokens)
    g = build_graph(net, m0, _node_cap(args))
    Path(args.out).write_text(to_dot(g, net), encoding="utf-8")
    return 0, {"nodes": len(g), "edges": len(g.edges), "out": args.out}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="s4pr", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, marking=True):
        p.add_argument("path", help="net document (JSON); 'case_study' loads the bundled fixture")
        p.add_argument("--cap", type=int, default=None, help="reachability node cap")
        if marking:
            p.add_argument(
                "--override-marking", action="append", metavar="P=K",
                help="replace initial tokens, e.g. p12=1 (repeatable or comma separated)",
            )

    p = sub.add_parser("validate", help="check S4PR structure and initial marking")
    p.add_argument("path")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("reach", help="reachability graph summary")
    common(p)
    p.add_argument("--dot", metavar="OUT", help="also write the graph as Graphviz")
    p.set_defaults(func=cmd_reach)

    p = sub.add_parser("classify", help="robust / non-robust markings")
    common(p)
    p.add_argument("--resource")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("synthesize", help="monitor plan for j failed units")
    common(p)
    p.add_argument("--resource")
    p.add_argument("--j", type=int, default=1)
    p.add_argument("--policy", choices=("full", "threshold"), default="full")
    p.add_argument("--amax", type=int, default=None)
    p.add_argument("--bmax", type=int, default=None)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("simulate", help="replay a failure scenario under the controller")
    common(p)
    p.add_argument("--resource")
    p.add_argument("--scenario", required=True)
    p.add_argument("--trace", metavar="OUT")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--policy", choices=("full", "threshold"), default="full")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("export-dot", help="write the reachability graph as Graphviz")
    common(p)
    p.add_argument("out")
    p.add_argument("--resource")
    p.add_argument(
        "--model", type=int, default=None, metavar="J",
        help="explore the inhibitor model with J units under repair",
    )
    p.set_defaults(func=cmd_export_dot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code, results = args.func(args)
    except (ParseError, OSError) as exc:
        print(f"{getattr(exc, 'code', 'IO')}: {exc}", file=sys.stderr)
        return 2
    except S4prError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(_report(args, results), indent=2, sort_keys=True))
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
