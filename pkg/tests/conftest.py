import time

import pytest

from olgbubbles import EconomyParams, SequenceSpec, Technology, Utility

SESSION_START = time.perf_counter()
ACCEPTANCE = {}
LAST = "test_criterion_9_full_suite_runtime"


def pytest_collection_modifyitems(items):
    # the suite-runtime criterion has to run after everything else
    last = [it for it in items if it.name == LAST]
    rest = [it for it in items if it.name != LAST]
    items[:] = rest + last


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def example3_params():
    return EconomyParams(Utility.log(0.9), Technology.cobb_douglas(1.0, 0.3), K0=1.0)


@pytest.fixture
def kocherlakota():
    e = 8.0 / 7.0
    return SequenceSpec.geometric(70.0, e), SequenceSpec.geometric(35.0, e)


@pytest.fixture
def kocherlakota_params(kocherlakota):
    y, o = kocherlakota
    return EconomyParams(Utility.crra(2.0, 7.0 / 8.0), None, endow_young=y, endow_old=o)
