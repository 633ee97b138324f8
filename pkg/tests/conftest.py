from functools import lru_cache

import pytest

from burkholder.burkfun import BurkholderFamily
from burkholder.constants import solve
from burkholder.specfun import Params


@lru_cache(maxsize=None)
def solved(p, d):
    return solve(Params(p, d))


@lru_cache(maxsize=None)
def family(p, d):
    series, bundle = solved(p, d)
    return BurkholderFamily(bundle, series)


@pytest.fixture
def fam():
    return family


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
