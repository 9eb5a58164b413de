import itertools

import numpy as np
import pytest

from oracles import separates
from reference_markings import M_R, M_UR
from s4pr.controller import Pipeline
from s4pr.errors import InadmissibleMarkingError, UnseparableError
from s4pr.gmec import (
    SupervisorPlan,
    build_supervisor,
    default_bounds,
    enumerate_separators,
    select_minimal_cover,
    verify_supervisor,
)
from s4pr.net import Gmec
from s4pr.reachability import build_graph
from s4pr.robustness import ReducedSets


def rs(adm, forb, places=None):
    k = len((adm or forb)[0])
    return ReducedSets(places or tuple(f"x{i}" for i in range(k)), tuple(adm), tuple(forb))


def weights(c, k):
    return tuple(c.gmec.weight(f"x{i}") for i in range(k))


@pytest.fixture(scope="module")
def j1(pipeline):
    return pipeline.run(1)


def test_case_study_separator_present(j1):
    pe = j1.reduced.projection_places
    found = {(tuple(c.gmec.weight(p) for p in pe), c.gmec.bound) for c in j1.candidates}
    assert ((1, 1, 2, 0), 1) in found


def test_every_candidate_separates_what_it_covers(j1):
    r = j1.reduced
    pe = r.projection_places
    for c in j1.candidates:
        l = [c.gmec.weight(p) for p in pe]
        assert separates(l, c.gmec.bound, r.admissible_reduced, c.covered)


def test_case_study_plan(j1, net):
    assert len(j1.plan) == 1
    assert j1.plan.optimal
    g = j1.plan.constraints[0]
    assert str(g) == "p2 + p3 + 2*p4 <= 1"
    L, B = j1.plan.matrices(net)
    assert L.shape == (1, 12) and B.tolist() == [1]


def test_single_candidate_cover_oracle(j1):
    # exhaustive: a plan of size one exists iff some candidate covers every representative
    universe = set(j1.reduced.forbidden_reduced)
    singles = [c for c in j1.candidates if c.covered >= universe]
    assert bool(singles) == (len(j1.plan) == 1)


def test_reduced_separation_implies_full_separation(j1, net):
    for g in j1.plan.constraints:
        assert all(g.value(net, m) <= g.bound for m in M_R)
    uncovered = [m for m in M_UR if all(g.value(net, m) <= g.bound for g in j1.plan.constraints)]
    assert uncovered == []


def test_plan_stable_under_wider_bounds(pipeline, j1):
    a, b = default_bounds(j1.reduced)
    wide = Pipeline(pipeline.net, pipeline.structure, pipeline.m0, "p12", a_max=a + 1, b_max=b + 1)
    assert wide.run(1).plan.constraints == j1.plan.constraints


def test_inseparable():
    r = rs([(1, 1)], [(1, 0)])
    assert enumerate_separators(r) == []
    with pytest.raises(UnseparableError) as ei:
        select_minimal_cover([], r.forbidden_reduced)
    assert list(ei.value.uncovered) == [(1, 0)]


def test_singleton():
    r = rs([(0,)], [(1,)])
    cands = enumerate_separators(r)
    assert (weights(cands[0], 1), cands[0].gmec.bound) == ((1,), 0)
    plan = select_minimal_cover(cands, r.forbidden_reduced)
    assert [str(g) for g in plan.constraints] == ["x0 <= 0"]


def test_disjoint_cover_needs_two():
    r = rs([(1, 1)], [(2, 0), (0, 2)])
    cands = enumerate_separators(r)
    plan = select_minimal_cover(cands, r.forbidden_reduced)
    assert len(plan) == 2 and plan.optimal
    # brute force: no single candidate covers both
    assert not any(len(c.covered) == 2 for c in cands)
    for g in plan.constraints:
        l = [g.weight("x0"), g.weight("x1")]
        assert separates(l, g.bound, r.admissible_reduced, plan.covered[g])


def test_empty_forbidden_gives_empty_plan():
    plan = select_minimal_cover([], [])
    assert len(plan) == 0 and plan.optimal


def test_exact_cover_against_exhaustive_search():
    r = rs([(2, 0, 0), (0, 2, 0), (0, 0, 2)], [(3, 0, 0), (0, 3, 0), (0, 0, 3), (1, 1, 1)])
    cands = enumerate_separators(r)
    plan = select_minimal_cover(cands, r.forbidden_reduced)
    universe = set(r.forbidden_reduced)
    best = next(
        k for k in range(1, 5)
        if any(set().union(*(c.covered for c in combo)) >= universe
               for combo in itertools.combinations(cands, k))
    )
    assert len(plan) == best


def test_build_supervisor_arcs(net, m0, j1):
    ctl, m = build_supervisor(net, j1.plan, m0)
    assert ctl.monitors[0][0] == "pc1"
    assert m[-1] == 1
    assert ctl.preset("t1") == {"p1": 1, "p11": 1, "pc1": 1}
    assert ctl.postset("t4")["pc1"] == 2


def test_build_supervisor_rejects_bad_reference(net, j1):
    with pytest.raises(InadmissibleMarkingError):
        build_supervisor(net, j1.plan, net.marking(p4=1))


def test_verify_detects_leaks_and_overblocking(net, m0):
    loose = verify_supervisor(net, m0, M_R, M_UR)
    assert not loose.no_forbidden and loose.maximally_permissive
    strict, m = build_supervisor(net, SupervisorPlan((Gmec.of({"p2": 1, "p3": 1, "p4": 1}, 0),)), m0)
    rep = verify_supervisor(strict, m, M_R, M_UR)
    assert rep.no_forbidden and not rep.maximally_permissive and not rep.ok


def test_verify_case_study(net, m0, j1):
    ctl, m = build_supervisor(net, j1.plan, m0)
    rep = verify_supervisor(ctl, m, M_R, M_UR)
    assert rep.ok
    assert rep.reachable == set(M_R)
    g = build_graph(ctl, m)
    L, B = j1.plan.matrices(net)
    k = ctl.place_index["pc1"]
    nodes = np.asarray(g.nodes)
    np.testing.assert_array_equal(nodes[:, :12] @ L[0] + nodes[:, k], B[0])
