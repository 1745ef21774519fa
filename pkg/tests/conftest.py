from __future__ import annotations

from pathlib import Path

import pytest

from harmonize import (
    compile_plan,
    parse_details_sheet,
    parse_variable_sheet,
)

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "data"

PAQUID_CSV = DATA / "paquid.csv"
PAQUID_VARIABLES = DATA / "paquid_variables.csv"
PAQUID_DETAILS = DATA / "paquid_details.csv"

PAQUID_COLUMNS = ["ID", "age", "dem", "agedem", "male", "CEP", "age_init",
                  "MMSE", "BVRT", "IST", "HIER", "CESD"]
PAQUID_SELECTED = ["sex", "MMSE_category", "CEP_bin", "MMSE-CEP"]

# one line per acceptance criterion, shown in the terminal summary
# (fd-level capture would swallow plain prints from inside the tests)
ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def paquid_variables():
    return parse_variable_sheet(PAQUID_VARIABLES.read_bytes())


@pytest.fixture(scope="session")
def paquid_details():
    return parse_details_sheet(PAQUID_DETAILS.read_bytes())


@pytest.fixture(scope="session")
def paquid_plan(paquid_variables, paquid_details):
    return compile_plan(paquid_variables, paquid_details, "paquid",
                        PAQUID_SELECTED, PAQUID_COLUMNS)
