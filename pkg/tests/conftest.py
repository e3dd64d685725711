import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hvdc_mopf.grid import builtin_case  # noqa: E402


@pytest.fixture(scope="session")
def case2t():
    return builtin_case("ieee14-2t")


@pytest.fixture(scope="session")
def case3t():
    return builtin_case("ieee14-3t")


@pytest.fixture(scope="session")
def case_ac():
    return builtin_case("ieee14-ac")


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
