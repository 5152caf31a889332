"""Collects the one-line acceptance verdicts and prints them after the run."""
import pytest

ACCEPTANCE = {}


@pytest.fixture
def verdict():
    def record(number, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title}: {detail}"
        ACCEPTANCE[(number, title)] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
