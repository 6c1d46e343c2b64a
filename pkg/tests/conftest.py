import pytest

_LINES: list = []


@pytest.fixture
def record():
    """Log one acceptance line; the summary prints them after the run."""

    def _record(criterion: str, ok: bool, detail: str = ""):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {criterion}: {detail}"
        _LINES.append(line)
        print(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
