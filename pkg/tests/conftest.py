"""Shared fixtures: small datasets reused across test modules."""

import pytest

from loopsim.data import generate_friedman1, generate_linear

# one measured pass/fail line per acceptance criterion, echoed at the end
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def linear_small():
    # 120 rows: big enough for a sliding window of 36 and KDE probes
    return generate_linear(120, 6, noise_variance=1.0, seed=11)


@pytest.fixture(scope="session")
def linear_medium():
    return generate_linear(500, 10, noise_variance=1.0, seed=42)


@pytest.fixture(scope="session")
def friedman_small():
    return generate_friedman1(150, 5, noise_variance=1.0, seed=11)
