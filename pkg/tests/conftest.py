import pytest

ACCEPTANCE_LINES: dict[str, str] = {}


@pytest.fixture
def acceptance():
    """Record a one-line verdict for an acceptance criterion."""

    def record(number, name, ok, detail=""):
        ACCEPTANCE_LINES[f"{number:02d}"] = f"[{'PASS' if ok else 'FAIL'}] {number}. {name}: {detail}"
        print(ACCEPTANCE_LINES[f"{number:02d}"])
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
