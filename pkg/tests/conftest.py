import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_CRITERIA: dict[int, str] = {}
N_CRITERIA = 9


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion; shown in the terminal summary."""

    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}"
        _CRITERIA[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in range(1, N_CRITERIA + 1):
            terminalreporter.write_line(_CRITERIA.get(number, f"criterion {number}: NOT RUN (skipped)"))
