"""Shared fixtures.

Acceptance checks register one line each through the `acceptance` fixture;
the lines are printed together at the end of the pytest run.
"""

import pytest

_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    def report(number: int, title: str, ok: bool, detail: str) -> bool:
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
        _ACCEPTANCE.append((number, line))
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE):
        terminalreporter.write_line(line)
