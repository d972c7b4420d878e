import functools

import pytest

from photon_retention.model import BlochState
from photon_retention.solver import RunConfig, propagate


@functools.lru_cache(maxsize=None)
def reference_run(tau: float = 0.0, rho_bb: float = 0.2):
    """Reference-parameter propagation, computed once per session."""
    return propagate(RunConfig(delay_tau=tau, initial_state=BlochState(rho_BB=rho_bb)))


@pytest.fixture(scope="session")
def run_ref():
    return reference_run


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import CRITERIA, RESULTS, _line
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, _check in CRITERIA:
        if name in RESULTS:
            terminalreporter.write_line(_line(name, *RESULTS[name]))
