import numpy as np
import pytest

from losstolerant import ChannelModel


@pytest.fixture
def rayleigh():
    return ChannelModel.rayleigh(rate=1.0, noise=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_policies(count, n_range=(1, 6), seed=2024):
    """Non-increasing outage vectors with entries in [0.01, 0.99]."""
    gen = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(gen.integers(n_range[0], n_range[1] + 1))
        out.append(np.sort(gen.uniform(0.01, 0.99, n + 1))[::-1])
    return out


# --------------------------------------------------------------------------
# acceptance summary: one PASS/FAIL line per numbered criterion

_criteria: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    mark = _marks.get(report.nodeid)
    if mark is None:
        return
    number, title = mark
    entry = _criteria.setdefault(number, [title, True])
    entry[1] = entry[1] and report.outcome == "passed"


_marks: dict[str, tuple] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _marks[item.nodeid] = tuple(mark.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title}")
