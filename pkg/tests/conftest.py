import numpy as np
import pytest

from kinrelax import sources
from kinrelax.kernels import GAS, MONOKINETIC
from kinrelax.renewal import solve

ACCEPTANCE_LINES = {}


def record(criterion, passed, detail):
    """Register one acceptance verdict; printed at the end of the session."""
    line = f"{criterion} {'PASS' if passed else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.setdefault(criterion, []).append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        for line in ACCEPTANCE_LINES[key]:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def bump():
    return sources.bounded_bump(2.0)


@pytest.fixture(scope="session")
def grey():
    return sources.grey_shell(0.2, 0.5)


@pytest.fixture(scope="session")
def equilibrium_solution():
    return solve(GAS, sources.EquilibriumMultiple(1.0), 100.0, 2e-3)


@pytest.fixture(scope="session")
def bump_solution(bump):
    return solve(GAS, bump, 200.0, 2e-3)


@pytest.fixture(scope="session")
def short_bump_solution(bump):
    return solve(GAS, bump, 12.0, 1e-2)


@pytest.fixture(scope="session")
def grey_solution(grey):
    return solve(MONOKINETIC, grey, 40.0, 2e-3)
