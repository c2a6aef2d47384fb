import pytest

from disguised_qbd import ModelParams

from params import EXAMPLE_1, EXAMPLE_2

_criteria = []


@pytest.fixture
def example1():
    return ModelParams.constant(*EXAMPLE_1)


@pytest.fixture
def example2():
    return ModelParams.constant(*EXAMPLE_2)


@pytest.fixture
def criterion():
    """Record one acceptance line; call as ``criterion(id, ok, detail)``."""

    def record(cid, ok, detail):
        _criteria.append((cid, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for cid, ok, detail in _criteria:
        terminalreporter.write_line(f"{cid:<4} {'PASS' if ok else 'FAIL'}  {detail}")
