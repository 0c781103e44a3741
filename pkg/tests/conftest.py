import numpy as np
import pytest

from bentguide import conformal


@pytest.fixture(params=conformal.available_backends())
def backend(request):
    """Run a test once per available map kernel."""
    previous = conformal.get_backend()
    conformal.set_backend(request.param)
    yield request.param
    conformal.set_backend(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for r in sorted(RESULTS, key=lambda r: r.number):
            terminalreporter.write_line(r.line())
