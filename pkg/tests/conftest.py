import time

import numpy as np
import pytest

_RESULTS: dict[int, list] = {}
_START = time.perf_counter()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    entry = _RESULTS.setdefault(number, [title, True, 0.0])
    if rep.when == "call":
        entry[2] += rep.duration
    if rep.failed:
        entry[1] = False


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, ok, secs = _RESULTS[number]
        tr.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title}  ({secs:.2f}s)")
    tr.write_line(f"wall time {time.perf_counter() - _START:.1f}s")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
