import numpy as np
import pytest

from tunneltime import kernels
from tunneltime.scattering import LayeredStack, RectangularBarrier

ACCEPTANCE_LINES = []


@pytest.fixture
def barrier():
    return RectangularBarrier(5.0, 20.0)


@pytest.fixture
def stack():
    return LayeredStack.nineteen_layer()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


BACKENDS = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: (int(s.split()[1].rstrip("abc:")), s)):
            terminalreporter.write_line(line)
