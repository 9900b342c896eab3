import contextlib

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("froglab", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("froglab")

_ACCEPTANCE: dict = {}


@pytest.fixture
def acceptance():
    """Record the outcome of one acceptance criterion.

    Use as ``with acceptance("3", "label") as notes: ...``; ``notes`` is a
    list of strings echoed in the summary.  Failures propagate unchanged.
    """

    @contextlib.contextmanager
    def record(number: str, label: str):
        notes: list = []
        try:
            yield notes
        except BaseException as exc:
            first = str(exc).strip().splitlines()[0] if str(exc).strip() else type(exc).__name__
            _ACCEPTANCE[number] = (label, False, notes + [first[:200]])
            raise
        _ACCEPTANCE[number] = (label, True, notes)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")

    def order(key):
        digits = "".join(c for c in key if c.isdigit())
        return int(digits), key

    for number in sorted(_ACCEPTANCE, key=order):
        label, ok, notes = _ACCEPTANCE[number]
        line = f"[{number:>3}] {'PASS' if ok else 'FAIL'}  {label}"
        if notes:
            line += "  (" + "; ".join(notes) + ")"
        terminalreporter.write_line(line)
