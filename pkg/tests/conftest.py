import numpy as np
import pytest

_RESULTS = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def record():
    """Record an acceptance outcome; printed in the terminal summary."""

    def _record(number, name, ok, detail=""):
        _RESULTS[number] = (name, bool(ok), detail)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        name, ok, detail = _RESULTS[number]
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {name}"
        if detail:
            line += f": {detail}"
        terminalreporter.write_line(line)
