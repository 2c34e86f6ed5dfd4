import pytest

_RESULTS = {}


@pytest.fixture
def criterion():
    """``criterion(k, passed, detail)`` records one acceptance line."""

    def record(k: int, passed: bool, detail: str = ""):
        _RESULTS[k] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_RESULTS):
        passed, detail = _RESULTS[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if passed else 'FAIL'}  {detail}")
