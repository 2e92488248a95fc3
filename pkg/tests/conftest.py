import numpy as np
import pytest

# one "criterion N: PASS/FAIL" line per acceptance criterion, filled by test_acceptance
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(key=20240611))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
