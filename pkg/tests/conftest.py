import logging
from pathlib import Path

import pytest

from procdisc.log import log_from_sequences, read_log

DATA = Path(__file__).parent / "data"

# four traces with B||C and D||E, every instance overlapping its partner
PARALLEL_LOG = [
    "A_s A_e B_s C_s C_e B_e E_s D_s D_e E_e F_s F_e".split(),
    "A_s A_e B_s C_s B_e C_e E_s D_s E_e D_e F_s F_e".split(),
    "A_s A_e C_s B_s B_e C_e D_s E_s D_e E_e F_s F_e".split(),
    "A_s A_e C_s B_s C_e B_e D_s E_s E_e D_e F_s F_e".split(),
]

# inclusive choice over B, C, D after A
INCLUSIVE_LOG = [
    ("A_s A_e B_s C_s D_s B_e D_e C_e E_s E_e".split(), 3),
    ("A_s A_e C_s D_s C_e D_e E_s E_e".split(), 2),
    ("A_s A_e B_s D_s D_e B_e E_s E_e".split(), 1),
]


@pytest.fixture
def parallel_log():
    return log_from_sequences(PARALLEL_LOG)


@pytest.fixture
def inclusive_log():
    return log_from_sequences(INCLUSIVE_LOG)


@pytest.fixture
def two_cases():
    return read_log(DATA / "two_cases.csv")


@pytest.fixture(autouse=True)
def _quiet_flags():
    # discovery warns about every flag; keep test output readable
    logging.getLogger("procdisc").setLevel(logging.ERROR)
    yield


ACCEPTANCE: list[str] = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL/SKIP line for an acceptance criterion, then assert."""
    def record(number: int, ok: bool | None, detail: str):
        status = "SKIP" if ok is None else "PASS" if ok else "FAIL"
        line = f"criterion {number}: {status} - {detail}"
        ACCEPTANCE.append(line)
        print(line)
        if ok is None:
            pytest.skip(detail)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
