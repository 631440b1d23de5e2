import pytest

from torusbif.family import SystemConfig


@pytest.fixture(scope="session")
def cfg05():
    return SystemConfig(0.05)


@pytest.fixture(scope="session")
def cfg01():
    return SystemConfig(0.01)


@pytest.fixture(scope="session")
def cfg005():
    return SystemConfig(0.005)


_VERDICTS = []


@pytest.fixture
def verdict(request):
    """``verdict(label, ok, detail)`` records one acceptance line and returns ``ok``."""
    def record(label, ok, detail=""):
        line = f"{label:<46} {'PASS' if ok else 'FAIL'}  {detail}"
        _VERDICTS.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
