import numpy as np
import pytest

from edgemob.model import SystemConstants
from edgemob.scenario import PeriodView, RadioParams, build_grid_topology, generate_trace

DESK_CONSTS = SystemConstants(workload_size=8e6, budget=3.0, horizon=100, min_rate=1e8, max_delay=5.0)


def make_view(lam, background, gain, service_rate=50.0, interference=0.0, bs=None, t=0,
              consts=DESK_CONSTS, radio=RadioParams()):
    background = np.atleast_1d(np.asarray(background, dtype=float))
    n = len(background)
    return PeriodView(
        t=t, lam=float(lam),
        bs=np.arange(n) if bs is None else np.asarray(bs),
        service_rate=np.broadcast_to(np.asarray(service_rate, dtype=float), (n,)).copy(),
        background=background,
        gain=np.broadcast_to(np.asarray(gain, dtype=float), (n,)).copy(),
        interference=np.broadcast_to(np.asarray(interference, dtype=float), (n,)).copy(),
        radio=radio, consts=consts,
    )


def random_view(rng, n=None, t=0, consts=DESK_CONSTS):
    """Candidate set with distances 10..250 m and the generator's load ranges."""
    n = n or int(rng.integers(1, 10))
    dist = rng.uniform(10, 250, size=n)
    gain = 10 ** (-(25.3 + 37.6 * np.log10(dist)) / 10)
    return make_view(rng.uniform(0, 12), rng.uniform(0, 40, size=n), gain, t=t, consts=consts)


@pytest.fixture(scope="session")
def topology():
    return build_grid_topology()


@pytest.fixture(scope="session")
def desk_trace(topology):
    return generate_trace(topology, DESK_CONSTS, seed=7)


# one line per acceptance criterion, printed after the test run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
