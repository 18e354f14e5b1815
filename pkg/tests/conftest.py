import pytest

from collsched import Demand, SolverOptions
from collsched.topology import diamond, funnel, relay_chain, star


@pytest.fixture(scope="session")
def solver_opts():
    return SolverOptions(time_limit=120.0)


@pytest.fixture
def star3():
    t = star(3)
    d = Demand(frozenset({("s", 0, "d1"), ("s", 0, "d2"), ("s", 0, "d3")}), 1, 1)
    return t, d


@pytest.fixture
def funnel3():
    t = funnel()
    d = Demand(frozenset({("s1", 0, "d"), ("s2", 1, "d"), ("s3", 2, "d")}), 3, 1)
    return t, d


@pytest.fixture
def latency_chain():
    # tau = beta = 1s, per-hop latency 1s on the relay chain, 5s on the
    # direct edge (= 2 beta + 3 alpha_hop); both sources race one unit to d.
    t = relay_chain(alpha_hop=1.0, alpha_direct=5.0)
    d = Demand(frozenset({("s1", 0, "d"), ("s2", 1, "d")}), 2, 1)
    return t, d


@pytest.fixture
def diamond_multicast():
    t = diamond(0.5)
    d = Demand(frozenset({("s", 0, "d1"), ("s", 0, "d2"), ("s", 0, "d3")}), 1, 1)
    return t, d
