import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from btrecover.advisor import MockAdvisor  # noqa: E402
from btrecover.monitor import execute_with_monitoring  # noqa: E402
from btrecover.scenarios import load_scenario  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def peg_small():
    return load_scenario("peg_small")


@pytest.fixture
def recovered_peg_small():
    return execute_with_monitoring(load_scenario("peg_small"), MockAdvisor("full"))


ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def verdict_line():
    """Record the pass/fail line for one acceptance criterion."""

    def record(number: int, title: str, ok: bool, detail: str = "") -> bool:
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title}" + (f" ({detail})" if detail else "")
        ACCEPTANCE_LINES[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
