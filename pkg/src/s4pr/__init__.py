"""Robust supervisory control of S4PR nets with an unreliable resource.

Typical use::

    from s4pr import case_study, build_graph, synthesize_controller

    doc = case_study()
    g = build_graph(doc.net, doc.m0)
    mmc = synthesize_controller(doc.net, doc.structure(), doc.m0, "p12")
"""

from .controller import (
    Event,
    FailureScenario,
    MultiModelController,
    Pipeline,
    RecoverySubnet,
    Trace,
    attach_recovery,
    build_model_j,
    build_model_n,
    simulate,
    synthesize_controller,
)
from .errors import S4prError
from .gmec import (
    SupervisorPlan,
    build_supervisor,
    enumerate_separators,
    select_minimal_cover,
    verify_supervisor,
)
from .io import NetDocument, case_study, dumps, load, loads, to_dot
from .net import (
    Arc,
    Diagnostic,
    Gmec,
    PetriNet,
    Place,
    Transition,
    add_monitor,
    enabled_transitions,
    fire,
    incidence_matrix,
)
from .reachability import ReachabilityGraph, bounds, build_graph, deadlocks, liveness
from .robustness import (
    Classification,
    ReducedSets,
    classify,
    failure_net,
    forbidden_set,
    reduce,
    select_projection_places,
)
from .structure import (
    S4prStructure,
    SemiFlow,
    check_initial_marking,
    independent_subnets,
    resource_semiflow,
    structure_from_net,
    validate_s4pr,
)

__version__ = "0.1.0"
