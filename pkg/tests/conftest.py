import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one pass/fail line per acceptance criterion."""

    def record(number, title, passed, detail):
        line = f"[criterion {number}] {'PASS' if passed else 'FAIL'} {title}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
