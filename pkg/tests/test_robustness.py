import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from reference_markings import M_R, M_UR
from s4pr.errors import ArgumentError, MarkingError, ProjectionError
from s4pr.robustness import (
    failure_net,
    forbidden_set,
    frozen_transitions,
    independent_transitions,
    is_robust,
    maximal_elements,
    minimal_elements,
    reduce,
    select_projection_places,
)

PE = ("p2", "p3", "p4", "p6")

vectors = st.lists(st.tuples(*[st.integers(0, 3)] * 3), max_size=12)


def leq(a, b):
    return all(x <= y for x, y in zip(a, b))


def test_partition_matches_reference(classification):
    assert classification.robust == set(M_R)
    assert classification.unrobust == set(M_UR)
    assert (len(classification.robust), len(classification.unrobust)) == (12, 11)


def test_partition_covers_graph(classification, graph):
    assert classification.all == graph.node_set
    assert not classification.robust & classification.unrobust


def test_is_robust_on_single_markings(net, structure):
    assert is_robust(net, structure, M_R[0], "p12")
    assert not is_robust(net, structure, M_UR[0], "p12")


def test_failure_net(net, m0):
    _, m = failure_net(net, "p12", m0, 1)
    assert m == m0[:11] + (1,)
    _, m = failure_net(net, "p12", m0, 2)
    assert m[-1] == 0
    with pytest.raises(MarkingError) as ei:
        failure_net(net, "p12", m0, 3)
    assert ei.value.code == "CANNOT_FAIL"
    with pytest.raises(ArgumentError):
        failure_net(net, "p2", m0, 1)


def test_frozen_and_independent_transitions(net, structure):
    # t3/t5 acquire p12; t4/t6 release it
    assert frozen_transitions(net, structure, "p12") == {"t3", "t4", "t5", "t6"}
    assert independent_transitions(structure, "p12") == {"t8", "t9"}


def test_forbidden_policies(classification):
    assert forbidden_set(classification, "p12", 1) == set(M_UR)
    thr = forbidden_set(classification, "p12", 1, "threshold")
    assert thr == {m for m in M_UR if m[11] >= 1}
    assert len(thr) == 7
    assert forbidden_set(classification, "p12", 2, "threshold") == {m for m in M_UR if m[11] >= 2}
    with pytest.raises(ArgumentError):
        forbidden_set(classification, "p12", 1, "bogus")
    with pytest.raises(ArgumentError):
        forbidden_set(classification, "p12", 0)


def test_projection_places(net, structure, classification):
    assert tuple(select_projection_places(net, structure, classification, "p12")) == PE


def test_reduced_sets(net, classification):
    rs = reduce(net, classification.robust, classification.unrobust, PE)
    assert rs.admissible_reduced == ((0, 1, 0, 1), (1, 0, 0, 1))
    assert rs.forbidden_reduced == ((0, 0, 1, 0), (1, 1, 0, 0), (2, 0, 0, 0))


def test_reduction_covers_projections(net, classification):
    rs = reduce(net, classification.robust, classification.unrobust, PE)
    assert all(any(leq(a, r) for r in rs.admissible_reduced) for a in rs.admissible_projected)
    assert all(any(leq(r, f) for r in rs.forbidden_reduced) for f in rs.forbidden_projected)


def test_overlapping_projection_rejected(net, classification):
    with pytest.raises(ProjectionError):
        reduce(net, classification.robust, classification.unrobust, ["p2"])


def test_unknown_projection_place(net, classification):
    with pytest.raises(ArgumentError):
        reduce(net, classification.robust, classification.unrobust, ["zz"])


def brute_maximal(vs):
    vs = set(vs)
    return sorted(v for v in vs if not any(w != v and leq(v, w) for w in vs))


def brute_minimal(vs):
    vs = set(vs)
    return sorted(v for v in vs if not any(w != v and leq(w, v) for w in vs))


@given(vectors)
def test_maximal_minimal_oracle(vs):
    assert maximal_elements(vs) == brute_maximal(vs)
    assert minimal_elements(vs) == brute_minimal(vs)


@given(vectors)
def test_extremes_form_antichains(vs):
    for pick in (maximal_elements(vs), minimal_elements(vs)):
        for a, b in itertools.permutations(pick, 2):
            assert not leq(a, b)
