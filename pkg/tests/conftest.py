import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

from coarsegroups.groups import FreeAbelian, FreeGroup, parse_group, schreier_f4_in_f2  # noqa: E402
from coarsegroups.metric import GeneratingSet  # noqa: E402


@pytest.fixture(scope="session")
def f2():
    return FreeGroup(2)


@pytest.fixture(scope="session")
def z():
    return FreeAbelian(1)


@pytest.fixture(scope="session")
def schreier():
    return schreier_f4_in_f2()


@pytest.fixture(scope="session")
def enlarged_f2(schreier):
    F = schreier.codomain
    return GeneratingSet(F, tuple(F.generators()) + schreier.generator_images, True, "S2+pi(S4)")


@pytest.fixture(scope="session")
def z_c4():
    return parse_group("semidirect(z, cyclic(4), action=inversion)")


@pytest.fixture(scope="session")
def z_c3():
    return parse_group("product(z, cyclic(3))")


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per criterion and print it immediately."""

    def emit(number: int, ok: bool, detail: str = "") -> bool:
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        print(line)
        ACCEPTANCE_LINES.append(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
