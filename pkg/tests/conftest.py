import pytest

_LINES = []


@pytest.fixture
def report():
    """Record one summary line per acceptance criterion."""
    def add(number, passed, detail):
        _LINES.append(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
        return passed
    return add


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance summary")
        for line in sorted(_LINES):
            terminalreporter.write_line(line)
