import pytest

from fracsob import Interval, Rectangle, build_domain, weight_from_spec


@pytest.fixture(scope="session")
def unit101():
    d = build_domain(Interval(0.0, 1.0), 101)
    return d, weight_from_spec("uniform", d)


@pytest.fixture(scope="session")
def unit9():
    d = build_domain(Interval(0.0, 1.0), 9)
    return d, weight_from_spec("uniform", d)


@pytest.fixture(scope="session")
def square8():
    d = build_domain(Rectangle(0.0, 1.0, 0.0, 1.0), 8)
    return d, weight_from_spec("uniform", d)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
