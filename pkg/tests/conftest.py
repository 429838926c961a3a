import numpy as np
import pytest

from locdilate import _kernels


@pytest.fixture
def rng():
    return np.random.default_rng(20081016)


@pytest.fixture(params=sorted(_kernels.IMPLEMENTATIONS))
def backend(request):
    """Run a test once per available kernel implementation."""
    return _kernels.IMPLEMENTATIONS[request.param]


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
