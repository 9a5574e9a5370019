import pytest

from hytep.grid_model import bundled_case_path, load_case

_ACCEPTANCE: list[str] = []


@pytest.fixture
def report():
    """Record a one-line acceptance verdict; all verdicts are repeated in the terminal summary."""

    def emit(line: str) -> None:
        print(line)
        _ACCEPTANCE.append(line)

    return emit


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def fig2():
    return load_case(bundled_case_path("fig2_two_bus"))


@pytest.fixture(scope="session")
def fig3():
    return load_case(bundled_case_path("fig3_low_demand"))


@pytest.fixture(scope="session")
def six_bus():
    return load_case(bundled_case_path("six_bus_sweep"))
