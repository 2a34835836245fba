from functools import lru_cache

import pytest

from sta_crane.inverse_design import ScenarioSpec, design_dual_protocol


@lru_cache(maxsize=None)
def dual(l0, lf, d, tf, g=9.81):
    return design_dual_protocol(ScenarioSpec(l0, lf, d, tf, g))


@pytest.fixture(scope="session")
def hoist_15():
    return dual(10.0, 5.0, 15.0, 15.0)


@pytest.fixture(scope="session")
def hoist_10():
    return dual(10.0, 5.0, 15.0, 10.0)


# criterion number -> (passed, detail), filled in by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
