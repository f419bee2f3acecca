import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("rslab", max_examples=30, deadline=None)
settings.load_profile("rslab")

_AC_LINES = {}


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def ac():
    """Record one acceptance line: ``ac("AC-1", ok, "detail")``."""
    def record(tag, ok, detail):
        line = f"{tag} {'PASS' if ok else 'FAIL'}: {detail}"
        _AC_LINES[tag] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _AC_LINES:
        terminalreporter.section("acceptance criteria")
        for tag in sorted(_AC_LINES, key=lambda s: int(s.split("-")[1])):
            terminalreporter.write_line(_AC_LINES[tag])
