import pytest
from hypothesis import settings

from gasgiant.metric import GasGiantMetric

settings.register_profile("numeric", deadline=None, max_examples=15, derandomize=True)
settings.load_profile("numeric")


@pytest.fixture(scope="session")
def model():
    """x^-1 (dx^2 + dy^2): the half-plane model with cycloid geodesics."""
    return GasGiantMetric(1.0, 2)


@pytest.fixture(scope="session")
def model_wide():
    """Same model on a taller collar, for rays with apex up to x = 1."""
    return GasGiantMetric(1.0, 2, x_max=4.0)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one acceptance line; printed again in the terminal summary."""
    def record(number, ok, detail):
        line = f"CRITERION {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append((number, line))
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
