import warnings

import pytest

from wprobe.errors import OverlapWarning

_ACCEPTANCE = {}


class AcceptanceLog:
    """Collects one pass/fail line per acceptance criterion."""

    def record(self, tag, ok, detail):
        prev = _ACCEPTANCE.get(tag)
        ok = bool(ok) and (prev is None or prev[0])
        text = detail if prev is None else f"{prev[1]}; {detail}"
        _ACCEPTANCE[tag] = (ok, text)
        return ok


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceLog()


@pytest.fixture
def quiet_overlap():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OverlapWarning)
        yield


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for tag in sorted(_ACCEPTANCE, key=lambda t: int(t[2:])):
        ok, detail = _ACCEPTANCE[tag]
        terminalreporter.write_line(f"{tag} {'PASS' if ok else 'FAIL'}  {detail}")
