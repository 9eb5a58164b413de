import dataclasses

import numpy as np
import pytest

from reference_markings import M_R, M_UR
from s4pr.errors import ArgumentError, NetStructureError
from s4pr.net import Arc, PetriNet, Place, Transition, incidence_matrix
from s4pr.structure import (
    check_initial_marking,
    conservation_values,
    dependent_subnets,
    independent_subnets,
    resource_semiflow,
    semiflow_matrix,
    structure_from_net,
    validate_s4pr,
)

EXPECTED_FLOWS = {
    "p10": {"p3": 1, "p10": 1},
    "p11": {"p2": 1, "p4": 1, "p7": 2, "p9": 2, "p11": 1},
    "p12": {"p4": 1, "p6": 1, "p12": 1},
}


def codes(net, m0=None):
    s = structure_from_net(net)
    out = {d.code for d in validate_s4pr(net, s)}
    if m0 is not None:
        out |= {d.code for d in check_initial_marking(net, s, m0)}
    return out


def rebuild(net, *, places=None, transitions=None, arcs=None):
    return PetriNet(
        net.places if places is None else places,
        net.transitions if transitions is None else transitions,
        net.arcs if arcs is None else arcs,
    )


def test_case_study_is_valid(net, structure, m0):
    assert validate_s4pr(net, structure) == []
    assert check_initial_marking(net, structure, m0) == []


def test_partition(structure):
    assert structure.idle_places == {1: "p1", 2: "p5", 3: "p8"}
    assert structure.operation_places == {
        1: frozenset({"p2", "p3", "p4"}), 2: frozenset({"p6", "p7"}), 3: frozenset({"p9"}),
    }
    assert structure.resource_places == ("p10", "p11", "p12")
    assert structure.unreliable == {"p12"}
    assert structure.reliable == ("p10", "p11")


@pytest.mark.parametrize("r", sorted(EXPECTED_FLOWS))
def test_semiflows(net, r):
    assert resource_semiflow(net, r).as_dict() == EXPECTED_FLOWS[r]


def test_semiflows_annihilate_incidence(net, structure):
    assert not (semiflow_matrix(net, structure) @ incidence_matrix(net)).any()


def test_semiflows_constant_on_reference_rows(net, structure, m0):
    # conservation oracle: every row of both marking matrices carries M0's invariant values
    ref = conservation_values(net, structure, m0)
    assert ref == {
        "I[p10]": 1, "I[p11]": 2, "I[p12]": 2, "subnet[1]": 2, "subnet[2]": 1, "subnet[3]": 1,
    }
    for row in M_R + M_UR:
        assert conservation_values(net, structure, row) == ref


def test_non_resource_semiflow_rejected(net):
    with pytest.raises(ArgumentError):
        resource_semiflow(net, "p2")


def test_independent_subnets(structure):
    assert independent_subnets(structure, "p12") == {3}
    assert dependent_subnets(structure, "p12") == {1, 2}
    with pytest.raises(ArgumentError) as ei:
        independent_subnets(structure, "p11")
    assert ei.value.code == "NOT_UNRELIABLE"


def test_shared_operation_place(net):
    arcs = [a for a in net.arcs if (a.source, a.target) != ("t9", "p8")] + [Arc("t9", "p6")]
    assert "NOT_STATE_MACHINE" in codes(rebuild(net, arcs=arcs))


def test_missing_idle(net):
    places = [dataclasses.replace(p, role="operation") if p.id == "p8" else p for p in net.places]
    assert "MISSING_IDLE" in codes(rebuild(net, places=places))


def test_not_strongly_connected(net):
    arcs = [a for a in net.arcs if (a.source, a.target) != ("t4", "p1")] + [Arc("t4", "p2")]
    found = codes(rebuild(net, arcs=arcs))
    assert found & {"NOT_STRONGLY_CONNECTED", "CYCLE_AVOIDS_IDLE"}


def test_resource_partition(net):
    places = [dataclasses.replace(p, unreliable=True) if p.id == "p2" else p for p in net.places]
    with pytest.raises(NetStructureError):
        rebuild(net, places=places)
    s = structure_from_net(net, unreliable=["p2"])
    assert "RESOURCE_PARTITION" in {d.code for d in validate_s4pr(net, s)}


def test_non_conservative_resource(net):
    # t4 returns two units of p12 but t3 takes only one
    arcs = [Arc("t4", "p12", 2) if (a.source, a.target) == ("t4", "p12") else a for a in net.arcs]
    found = codes(rebuild(net, arcs=arcs))
    assert found & {"NO_SEMIFLOW", "BAD_SEMIFLOW"}


def test_initial_marking_diagnostics(net):
    assert "IDLE_UNMARKED" in codes(net, net.marking(p1=0, p5=1, p8=1, p10=1, p11=2, p12=2))
    assert "OPERATION_MARKED" in codes(net, net.marking(p1=2, p2=1, p5=1, p8=1, p10=1, p11=2, p12=2))
    # t6 and t8 need two units of p11
    assert "RESOURCE_CAPACITY" in codes(net, net.marking(p1=2, p5=1, p8=1, p10=1, p11=1, p12=2))


def test_duplicate_place_is_structural(net):
    with pytest.raises(NetStructureError) as ei:
        rebuild(net, places=list(net.places) + [Place("p1")])
    assert ei.value.code == "DUP_PLACE"


def test_isolated_resource_flagged():
    net = PetriNet(
        [Place("i", "idle", 1), Place("o", "operation", 1), Place("r", "resource")],
        [Transition("a", 1), Transition("b", 1)],
        [Arc("i", "a"), Arc("a", "o"), Arc("o", "b"), Arc("b", "i")],
    )
    assert "BAD_SEMIFLOW" in codes(net)


def test_semiflow_matrix_shape(net, structure):
    m = semiflow_matrix(net, structure)
    assert m.shape == (3, 12)
    assert np.array_equal(m[:, net.place_index["p12"]], [0, 0, 1])
