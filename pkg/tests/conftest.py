import numpy as np
import pytest

from intervalthermo import maps
from intervalthermo.pressure import default_scheme


@pytest.fixture(scope="session")
def tent():
    return maps.tent()


@pytest.fixture(scope="session")
def doubling():
    return maps.doubling()


@pytest.fixture(scope="session")
def chebyshev():
    return maps.chebyshev()


@pytest.fixture(scope="session")
def q39():
    return maps.quadratic(3.9)


@pytest.fixture(scope="session")
def schemes(tent, doubling, chebyshev):
    """Default first-return schemes (with distortion bounds) of the Markov built-ins."""
    return {f.name: default_scheme(f)[0] for f in (tent, doubling, chebyshev)}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Record one verdict line per acceptance criterion; printed in the terminal summary."""

    def record(number, title, passed, detail):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        _ACCEPTANCE.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
