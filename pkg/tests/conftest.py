import time

import numpy as np
import pytest

from hfgi.hmc import HmcConfig, run_chain
from hfgi.models.schwinger import SchwingerModel

SCHWINGER_8 = dict(L=8, T=8, beta=1.0, m0=0.352443)

# one pass/fail line per acceptance criterion, filled by test_acceptance
CRITERIA: dict = {}
# wall time of expensive shared fixtures, charged to the criteria that use them
TIMINGS: dict = {}


@pytest.fixture(scope="session")
def schwinger8():
    return SchwingerModel(**SCHWINGER_8, solver="lu")


@pytest.fixture(scope="session")
def thermalized8(schwinger8):
    """8x8 configuration after 200 leapfrog trajectories from a cold start."""
    m = schwinger8
    t0 = time.perf_counter()
    stats = run_chain(m, HmcConfig(tau=1.0, n_steps=10, scheme="BAB", n_traj=200, seed=11), m.state(m.cold_start()))
    TIMINGS["thermalized8"] = time.perf_counter() - t0
    return np.array(stats.final_state.q)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[k])
