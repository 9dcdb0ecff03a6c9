import numpy as np
import pytest

from leapfrog_nn.network import forward, new_random, random_sample

ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(line)


def make_case(layer_sizes, seed):
    """Network, sample and trace for a seeded random case."""
    net = new_random(layer_sizes, seed)
    x, y = random_sample(net, seed)
    return net, x, y, forward(net, x)


@pytest.fixture
def small_case():
    return make_case((3, 5, 5, 2), 11)


def bits(arr):
    return np.asarray(arr, dtype=np.float64).tobytes()
