import numpy as np
import pytest

from rctopo.network import Branch, Node, RcNetwork, discretize, five_zone_network
from rctopo.simulate import NoisePlan, simulate_panel


def build_network(m, edges, resistance=10.0, capacitance=1.0, ambient=15.0, dt=1.0):
    """Nodes labelled 1..m; ``edges`` uses those labels."""
    nodes = tuple(Node(k + 1, capacitance, ambient) for k in range(m))
    branches = tuple(Branch(a, b, resistance) for a, b in edges)
    return RcNetwork(nodes, branches, dt)


def random_network(rng, m, p=0.5):
    edges = [(a, b) for a in range(1, m + 1) for b in range(a + 1, m + 1) if rng.random() < p]
    nodes = tuple(Node(k + 1, float(rng.uniform(0.5, 2.0)), float(rng.uniform(10, 30)))
                  for k in range(m))
    branches = tuple(Branch(a, b, float(rng.uniform(8, 30))) for a, b in edges)
    return RcNetwork(nodes, branches, 1.0)


@pytest.fixture
def chain3():
    return build_network(3, [(1, 2), (2, 3)])


def two_node_network():
    """Two coupled zones whose exact filters decay fast enough for a lag order of 10."""
    return build_network(2, [(1, 2)], ambient=5.0)


@pytest.fixture
def two_node():
    return two_node_network()


@pytest.fixture
def five_zone():
    return five_zone_network()


def simulated(net, n, seed=0, kind="white", coefficients=()):
    dyn = discretize(net)
    plan = NoisePlan.uniform(net.m, 1.0, kind, coefficients, seed)
    return simulate_panel(dyn, plan, n, 1000, net.labels)
