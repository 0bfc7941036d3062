from __future__ import annotations

import pytest

# (criterion, passed, detail) lines recorded by test_acceptance.py
ACCEPTANCE_LINES: list[tuple[str, bool, str]] = []


@pytest.fixture
def record_acceptance():
    def _record(criterion: str, passed: bool, detail: str) -> None:
        ACCEPTANCE_LINES.append((criterion, passed, detail))

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")
