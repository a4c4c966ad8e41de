import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from morreylab.grid import Domain, SamplingPlan, TestFunctionSpec, sample_function

# derandomized so that the suite is reproducible run to run
settings.register_profile(
    "repro",
    derandomize=True,
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repro")


@pytest.fixture
def dom1():
    return Domain(1, 4.0, 128)


@pytest.fixture
def chi_pair():
    dom = Domain(1, 2.0, 256)
    chi = sample_function(TestFunctionSpec.indicator((0.0,), 1.0), dom)
    return dom, (chi, chi)


@pytest.fixture
def plan1(dom1):
    return SamplingPlan.dyadic([(0.0,), (0.5,), (-0.75,)], 2 * dom1.h, 5, 1)


def rel_err(a, b):
    return abs(a - b) / abs(b)


def rng(seed=0):
    return np.random.default_rng(seed)


def pytest_terminal_summary(terminalreporter):
    from .acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES):
            terminalreporter.write_line(line)
