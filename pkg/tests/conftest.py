import pytest

from rydion.structure import QuantumDefectModel

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def ca_model():
    return QuantumDefectModel.calcium_ion()


@pytest.fixture
def criterion():
    """Record one acceptance outcome: criterion(number, passed, detail)."""

    def record(number, passed, detail):
        _ACCEPTANCE[number] = (bool(passed), detail)
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
