import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from roadpf.network import RoadNetwork, make_grid_network

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def grid3():
    return make_grid_network(3, 50.0)


@pytest.fixture
def grid10():
    return make_grid_network(10, 100.0)


@pytest.fixture
def line_net():
    """One 1 km segment along the x axis."""
    return RoadNetwork([(0, 0.0, 0.0), (1, 1000.0, 0.0)], [(0, 0, 1)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_network(rng, n_nodes=12, n_segments=20, extent=200.0):
    """Random planar node cloud joined by random distinct segments."""
    nodes = [(i, *rng.uniform(0, extent, 2)) for i in range(n_nodes)]
    pairs = set()
    while len(pairs) < n_segments:
        u, v = rng.choice(n_nodes, 2, replace=False)
        pairs.add((min(u, v), max(u, v)))
    return RoadNetwork(nodes, [(k, u, v) for k, (u, v) in enumerate(sorted(pairs))])
