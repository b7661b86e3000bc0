import contextlib

import pytest

_CRITERIA = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the block passes iff it raises nothing."""

    @contextlib.contextmanager
    def record(label):
        ok = False
        try:
            yield
            ok = True
        finally:
            _CRITERIA.append((label, ok))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok in _CRITERIA:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}")
