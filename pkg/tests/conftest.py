import pytest

from cubicsplit.config import preset
from cubicsplit.field import golden_field
from cubicsplit.koch import principal_koch
from cubicsplit.pipeline import run_analyze
from cubicsplit.resonances import classify

# acceptance lines, filled by test_acceptance.py and echoed in the summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def golden():
    return golden_field()


@pytest.fixture(scope="session")
def koch(golden):
    return principal_koch(golden)


@pytest.fixture(scope="session")
def consts(koch):
    return classify(koch)


@pytest.fixture(scope="session")
def analysis():
    return run_analyze(preset("cubic-golden"))


@pytest.fixture(scope="session")
def params(analysis):
    return analysis.params


@pytest.fixture(scope="session")
def acceptance_lines():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
