import numpy as np
import pytest

from stalloc import (
    ExponentialIntensity,
    PowerLaw,
    Scenario,
    compute_thresholds,
    max_distribution,
    utility_distribution,
)

ACCEPTANCE_LINES = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def defaults():
    """Reference setting: R=1, rate 10, slot 1, T=30, N=10, eta=1.5, mu=1."""
    s = Scenario(radius=1.0, rate=10.0, slot=1.0, horizon=30, resources=10)
    m, ix = PowerLaw(1.5), ExponentialIntensity(1.0)
    base = utility_distribution(s, m, ix)
    maxd = max_distribution(s.mean_requests, base)
    table = compute_thresholds(s.horizon, s.resources, maxd)
    return s, m, ix, base, maxd, table


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def report(request):
    """Record and print one PASS/FAIL line for an acceptance criterion."""
    lines = request.config.stash.setdefault(ACCEPTANCE_LINES, [])

    def emit(label, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} criterion {label}: {detail}"
        lines.append(line)
        print(line)
        return passed

    return emit


def pytest_terminal_summary(terminalreporter):
    lines = terminalreporter.config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
