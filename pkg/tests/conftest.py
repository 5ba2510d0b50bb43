"""Shared fixtures, plus the acceptance-criteria report.

The acceptance tests record one verdict per criterion through the
`acceptance` fixture; the summary hook prints them as a block at the
end of the run so the final line-per-criterion table lands in the
terminal output next to the pytest tally.
"""

import re

import pytest

ACCEPTANCE_LINES: list[tuple[int, bool, str]] = []


@pytest.fixture(scope="session")
def acceptance():
    """Callable fixture: report(criterion_number, passed, detail)."""

    def report(num: int, ok: bool, detail: str) -> None:
        ACCEPTANCE_LINES.append((int(num), bool(ok), str(detail)))

    return report


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when != "call" or not rep.failed:
        return
    match = re.match(r"test_c(\d\d)_", item.name)
    if not match:
        return
    num = int(match.group(1))
    if not any(n == num for n, _, _ in ACCEPTANCE_LINES):
        reason = rep.longreprtext.strip().splitlines()
        tail = reason[-1][:140] if reason else "no traceback"
        ACCEPTANCE_LINES.append(
            (num, False, f"test raised before reporting: {tail}")
        )


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, detail in sorted(ACCEPTANCE_LINES):
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {num:>2}: {verdict} - {detail}")
