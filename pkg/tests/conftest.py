import numpy as np
import pytest

ACCEPTANCE_LINES: list[str] = []

SAMPLE_SEED = 20240501


def fixed_sample(n=200, seed=SAMPLE_SEED):
    return tuple(float(v) for v in np.random.default_rng(seed).gamma(2.0, 1.0, n))


@pytest.fixture(scope="session")
def sample200():
    return fixed_sample()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
