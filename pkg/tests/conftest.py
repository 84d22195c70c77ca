"""Shared hooks: the acceptance suite reports one verdict line per criterion at the end of the run."""

import pytest

_VERDICTS: dict[int, str] = {}


@pytest.fixture
def verdict():
    """Record ``verdict(number, ok, detail)``; the line is printed now and repeated in the summary."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        _VERDICTS[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_VERDICTS):
            terminalreporter.write_line(_VERDICTS[number])
