import itertools
from pathlib import Path

import pytest

from relpress import example1 as ex1
from relpress.symbolic import FactorCode, identity_code, make_sft

ROOT = Path(__file__).resolve().parents[1]
SYSTEMS = ROOT / "systems"
FIXTURES = Path(__file__).with_name("fixtures")

# lines printed by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def e1():
    X, code = ex1.system()
    return X, code


@pytest.fixture(scope="session")
def golden():
    return make_sft(["1", "2"], [("1", "1"), ("1", "2"), ("2", "1")])


@pytest.fixture(scope="session")
def golden_id(golden):
    return identity_code(golden)


@pytest.fixture(scope="session")
def full2():
    return make_sft(["0", "1"], list(itertools.product("01", repeat=2)))


@pytest.fixture(scope="session")
def collapse(full2):
    return FactorCode(full2, {"0": "*", "1": "*"})
