import contextlib
import time

import pytest

# criterion number -> (passed, title, error, seconds, notes)
ACCEPTANCE = {}


def _line(n, passed, title, err, dt, notes):
    msg = f"criterion {n:>2}: {'PASS' if passed else 'FAIL'}  {title} [{dt:.2f}s]"
    if notes:
        msg += " -- " + "; ".join(notes)
    if err:
        msg += " -- " + err
    return msg


@contextlib.contextmanager
def _record(number, title):
    notes = []
    t0 = time.perf_counter()
    try:
        yield notes
    except BaseException as exc:
        first = str(exc).splitlines()[0] if str(exc) else ""
        ACCEPTANCE[number] = (False, title, f"{type(exc).__name__}: {first}",
                              time.perf_counter() - t0, notes)
        print(_line(number, *ACCEPTANCE[number]))
        raise
    ACCEPTANCE[number] = (True, title, "", time.perf_counter() - t0, notes)
    print(_line(number, *ACCEPTANCE[number]))


@pytest.fixture
def criterion():
    """``with criterion(n, title) as notes:`` records a pass/fail verdict."""
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(_line(n, *ACCEPTANCE[n]))
