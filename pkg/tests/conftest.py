import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fiberalloc.core_model import build_hexarotor

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

HOVER = np.array([0.0, 0.0, 0.0, 4.905])


@pytest.fixture(scope="session")
def hexa():
    return build_hexarotor(0.5, 0.25, 1.0, 0.05)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def central_diff(f, u, h=1e-6):
    g = np.zeros_like(u)
    for i in range(len(u)):
        e = np.zeros_like(u)
        e[i] = h
        g[i] = (f(u + e) - f(u - e)) / (2 * h)
    return g


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
