import pytest
from hypothesis import HealthCheck, settings

from cstraj import ModelParams, PropagatorLabels

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_LINES = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    return request.config.stash.setdefault(_LINES, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def harmonic():
    return ModelParams(hbar=1.0, b=1.0, lam=1.0, beta=0.0)


@pytest.fixture
def diag_labels(harmonic):
    return PropagatorLabels.make(0.0, 1.0, 0.0, 1.0, 0.0, harmonic)


# The three full-length sweeps are shared by the acceptance module and the
# assembler invariants; each takes several seconds.
SWEEP_CONFIGS = {
    "harmonic": (ModelParams(lam=1.0, beta=0.0), 10.0),
    "weak_quartic": (ModelParams(lam=1.0, beta=0.01), 10.0),
    "pure_quartic": (ModelParams(lam=0.0, beta=0.1), 3.0),
}


class SweepCase:
    def __init__(self, name):
        import time

        import numpy as np

        from cstraj import propagate_sweep, solve_spectrum
        from cstraj.oracle import exact_csp_series

        self.name = name
        self.params, t_max = SWEEP_CONFIGS[name]
        self.labels = PropagatorLabels.make(0.0, 1.0, 0.0, 1.0, 0.0, self.params)
        self.T_grid = np.linspace(0.0, t_max, 1000)
        start = time.perf_counter()
        self.out = propagate_sweep(self.labels, self.T_grid, self.params)
        self.seconds = time.perf_counter() - start
        self.eig = solve_spectrum(self.params, 200)
        self.exact = exact_csp_series(self.eig, self.labels, self.params, self.out.T)


@pytest.fixture(scope="session")
def sweep_cases():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = SweepCase(name)
        return cache[name]

    return get
