import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from reference_markings import M_R
from s4pr.controller import (
    Event,
    FailureScenario,
    Pipeline,
    attach_recovery,
    build_model_j,
    build_model_n,
    entry_transitions,
    independent_activity,
    simulate,
)
from s4pr.errors import ArgumentError, ScenarioError
from s4pr.net import Arc
from s4pr.reachability import build_graph, deadlocks, liveness
from s4pr.structure import conservation_values

events = st.one_of(
    st.just("FAIL"),
    st.just("REPAIR"),
    st.tuples(st.just("AUTO"), st.integers(1, 15), st.integers(0, 10_000)),
)


def with_q(m, q=0):
    return tuple(m) + (q,)


def test_attach_recovery(net):
    base, rec = attach_recovery(net, "p12")
    assert base.place_ids[-1] == "q"
    assert set(base.arcs) - set(net.arcs) == {
        Arc("p12", "t_f"), Arc("t_f", "q"), Arc("q", "t_r"), Arc("t_r", "p12"),
    }
    assert not base.transition("t_f").controllable
    assert not base.transition("t_r").controllable
    with pytest.raises(ArgumentError) as ei:
        attach_recovery(base, "p12")
    assert ei.value.code == "RECOVERY_PRESENT"
    with pytest.raises(ArgumentError) as ei:
        attach_recovery(net, "p11")
    assert ei.value.code == "NOT_UNRELIABLE"


def test_recovery_restricts_to_plant(net, m0):
    base, _ = attach_recovery(net, "p12")
    g = build_graph(base, with_q(m0), disabled={"t_f", "t_r"})
    assert {m[:-1] for m in g.nodes} == build_graph(net, m0).node_set


def test_model_n(net, structure, m0):
    base, rec = attach_recovery(net, "p12")
    assert entry_transitions(base, structure, {1, 2}) == ["t1", "t5"]
    mn = build_model_n(base, rec, structure, 2)
    assert set(mn.arcs) - set(base.arcs) == {
        Arc("q", "t1", 2, "inhibitor"), Arc("q", "t5", 2, "inhibitor"),
    }
    start = m0[:11] + (0, 2)
    g = build_graph(mn, start, disabled={"t_r"})
    assert len(g) == 2
    assert deadlocks(g, mn) == set()
    live = liveness(g, mn, ["t8", "t9"])
    assert live.all_live


def test_model_n_rejects_zero_capacity(net, structure):
    base, rec = attach_recovery(net, "p12")
    with pytest.raises(ArgumentError):
        build_model_n(base, rec, structure, 0)


def test_build_model_j(net, structure, m0, pipeline):
    base, rec = attach_recovery(net, "p12")
    plan = build_model_j(base, rec, structure, 1, pipeline)
    assert [str(g) for g in plan.constraints] == ["p2 + p3 + 2*p4 <= 1"]


def test_pipeline_limits(pipeline, net, structure, m0):
    with pytest.raises(ArgumentError):
        pipeline.run(0)
    with pytest.raises(ArgumentError) as ei:
        pipeline.run(2)
    assert ei.value.code == "USE_MODEL_N"
    with pytest.raises(ArgumentError):
        Pipeline(net, structure, m0, "p11")


def test_threshold_policy_same_plan(net, structure, m0):
    out = Pipeline(net, structure, m0, "p12", policy="threshold").run(1)
    assert len(out.forbidden) == 7
    assert [str(g) for g in out.plan.constraints] == ["p2 + p3 + 2*p4 <= 1"]


def test_controller_shape(mmc):
    assert mmc.capacity == 2
    assert set(mmc.plans) == {1}
    (g, row), = mmc.monitor_rows(1)
    assert row == {"t1": -1, "t3": -1, "t4": 2}
    assert mmc.monitor_rows(0) == []
    net, m = mmc.model(1, with_q(M_R[0], 0))
    assert net.place_ids[-1] == "pc1" and m[-1] == 1


def test_double_failure_runs_only_independent_subnet(mmc, m0):
    tr = simulate(mmc, m0, FailureScenario.of("FAIL", "FAIL", ("AUTO", 20, 7)))
    assert not tr.rejected
    assert tr.model == 2
    assert set(tr.fired(2)) - {"t_f"} == {"t8", "t9"}
    act = independent_activity(tr, mmc)
    assert act["t8"][2] + act["t9"][2] == 20


def test_single_failure_stays_admissible(mmc, m0):
    tr = simulate(mmc, m0, FailureScenario.of("FAIL", ("AUTO", 100, 3)))
    assert not tr.rejected
    restored = [m[:11] + (m[11] + m[12],) for m in tr.markings()]
    assert set(restored) <= set(M_R)


def test_fail_then_repair_returns_home(mmc, m0):
    tr = simulate(mmc, m0, FailureScenario.of("FAIL", "REPAIR"))
    assert tr.final == with_q(m0) and tr.model == 0


def test_repair_without_failure_rejected(mmc, m0):
    tr = simulate(mmc, m0, FailureScenario.of("REPAIR"))
    assert tr.rejected[0].reason == "no unit under repair"


def test_fail_in_non_robust_marking_rejected(mmc, m0):
    tr = simulate(mmc, m0, FailureScenario.of(("FIRE", "t1"), ("FIRE", "t1"), "FAIL"))
    assert [s.reason for s in tr.rejected] == ["failure in a non-robust marking"]


def test_monitor_blocks_second_part(mmc, m0):
    tr = simulate(mmc, m0, FailureScenario.of("FAIL", ("FIRE", "t1"), ("FIRE", "t1")))
    assert tr.rejected[0].reason.startswith("blocked by monitor")


def test_bad_scenarios(mmc, m0):
    with pytest.raises(ScenarioError):
        simulate(mmc, m0, FailureScenario.of(("FIRE", "t_f")))
    with pytest.raises(ScenarioError):
        simulate(mmc, m0, FailureScenario.of(("FIRE", "zz")))
    with pytest.raises(ScenarioError):
        FailureScenario.from_json([{"event": "EXPLODE"}])
    with pytest.raises(ScenarioError):
        FailureScenario.from_json({"event": "FAIL"})


def test_event_round_trip():
    for ev in (Event("FAIL"), Event("FIRE", "t1"), Event("AUTO", count=4, seed=9)):
        assert Event.from_dict(ev.to_dict()) == ev


def test_simulation_is_deterministic(mmc, m0):
    sc = FailureScenario.of("FAIL", ("AUTO", 30), "REPAIR", ("AUTO", 30), seed=5)
    assert simulate(mmc, m0, sc).steps == simulate(mmc, m0, sc).steps


@settings(max_examples=80, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.lists(events, min_size=1, max_size=12), st.integers(0, 1000))
def test_conservation_under_random_scenarios(mmc, m0, structure, steps, seed):
    net = mmc.original
    tr = simulate(mmc, m0, FailureScenario.of(*steps, seed=seed))
    ref = conservation_values(net, structure, m0)
    flow = structure.semiflow("p12")
    for st_ in tr.steps:
        m = st_.marking
        restored = m[:11] + (m[11] + m[12],)
        assert flow.value(net, m[:12]) + m[12] == m0[11]
        assert conservation_values(net, structure, restored) == ref
        assert m[12] == st_.model
        if st_.model == 1:
            (g, _), = mmc.monitor_rows(1)
            assert st_.monitors == (g.bound - g.value(net, m[:12]),)
            assert st_.monitors[0] >= 0
        if not st_.accepted and st_.event in ("FAIL", "REPAIR"):
            assert "monitor" not in (st_.reason or "")
