import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from s4pr import build_graph, case_study, classify  # noqa: E402
from s4pr.controller import Pipeline, synthesize_controller  # noqa: E402


@pytest.fixture(scope="session")
def doc():
    return case_study()


@pytest.fixture(scope="session")
def net(doc):
    return doc.net


@pytest.fixture(scope="session")
def m0(doc):
    return doc.m0


@pytest.fixture(scope="session")
def structure(doc):
    return doc.structure()


@pytest.fixture(scope="session")
def graph(net, m0):
    return build_graph(net, m0)


@pytest.fixture(scope="session")
def classification(net, structure, graph):
    return classify(net, structure, graph, "p12")


@pytest.fixture(scope="session")
def pipeline(net, structure, m0):
    return Pipeline(net, structure, m0, "p12")


@pytest.fixture(scope="session")
def mmc(net, structure, m0):
    return synthesize_controller(net, structure, m0, "p12")
