import numpy as np
import pytest

from ewarn import fixtures
from ewarn.data import SynthEventConfig, load_matrix, synth_event
from ewarn.pipeline import read_series


@pytest.fixture(scope="session")
def case_degrees():
    labels, degrees = read_series(fixtures.path("case_degrees.csv"))
    return labels, np.array(degrees)


@pytest.fixture(scope="session")
def test_slices():
    return load_matrix(fixtures.path("case_test_slices.csv"))


@pytest.fixture(scope="session")
def synthetic():
    return synth_event(SynthEventConfig(seed=0))


_criteria = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _criteria.append((marker.args[0], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _criteria:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
