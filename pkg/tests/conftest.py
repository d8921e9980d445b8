import pytest

from coinwalk.optimize import minimize_global

ACCEPTANCE_LINES: list[str] = []


def record(criterion: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def optimum_t10():
    return minimize_global(10, restarts=50, seed=1)


@pytest.fixture(scope="session")
def optimum_t15():
    return minimize_global(15, restarts=50, seed=1)


@pytest.fixture(scope="session")
def optimum_t25():
    return minimize_global(25, restarts=50, seed=1)
