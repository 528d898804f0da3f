import numpy as np
import pytest

from compiled_xor import chsh, honest_compile, solve, strategy_from_vectors
from compiled_xor.compiled import MockQhe

SQRT2 = np.sqrt(2.0)
CHSH_BIAS = SQRT2 / 2
CHSH_VALUE = (2 + SQRT2) / 4


@pytest.fixture(scope="session")
def chsh_game():
    return chsh()


@pytest.fixture(scope="session")
def chsh_solution(chsh_game):
    return solve(chsh_game)


@pytest.fixture(scope="session")
def chsh_quantum(chsh_solution):
    return strategy_from_vectors(chsh_solution.primal)


@pytest.fixture(scope="session")
def chsh_compiled(chsh_quantum):
    return honest_compile(chsh_quantum)


@pytest.fixture
def transparent():
    return MockQhe()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# --------------------------------------------------------------------------
# acceptance summary: one line per criterion, printed after the run

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    def record(number: int, title: str, ok: bool, elapsed: float, limit: float, detail: str = ""):
        within = elapsed < limit
        status = "PASS" if ok and within else "FAIL"
        line = f"[{status}] criterion {number:2d}: {title} ({elapsed:.2f}s / {limit:g}s)"
        if detail:
            line += f" {detail}"
        _ACCEPTANCE_LINES.append(line)
        return ok and within
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
