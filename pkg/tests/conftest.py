import pytest

RESULTS = {}


@pytest.fixture
def record():
    """``record(n, passed, detail)`` stores one acceptance verdict."""

    def _record(n, passed, detail=""):
        RESULTS[n] = (bool(passed), detail)
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
