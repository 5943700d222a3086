import pytest

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def _verdict(number: int, title: str, passed: bool, detail: str):
        line = f"AC{number} {'PASS' if passed else 'FAIL'}: {title} | {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line

    return _verdict


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
