import math

import pytest
from hypothesis import settings

from pllgss.lyapunov import lyapunov_context
from pllgss.model import DimlessParams, PhysicalParams, derive_dimless

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def phys():
    """Reference test case: SCR 2, 1 pu current, k_pn 20, k_in 200, 50 Hz."""
    return PhysicalParams()


@pytest.fixture(scope="session")
def dp(phys):
    return derive_dimless(phys)


@pytest.fixture(scope="session")
def ctx(dp):
    return lyapunov_context(dp)


@pytest.fixture(scope="session")
def pendulum():
    # undamped, unforced: separatrix x = +-2 cos(delta/2)
    return DimlessParams(m=0.0, gamma=0.0, h=0.0)


def finite_diff(f, s, eps=1e-6):
    d, x = s
    return ((f((d + eps, x)) - f((d - eps, x))) / (2 * eps),
            (f((d, x + eps)) - f((d, x - eps))) / (2 * eps))


TWO_PI = 2 * math.pi


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS):
            terminalreporter.write_line(line)
