import zlib

import pytest

from concentra.samplers import RngStream

_ACCEPTANCE = []


@pytest.fixture
def rng(request):
    # one stream per test, keyed by the test name so tests do not share draws
    return RngStream(20240611, zlib.crc32(request.node.name.encode()))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        label, title = marker.args
        status = "PASS" if rep.passed else "FAIL"
        _ACCEPTANCE.append(f"criterion {label:<4} {status}  {rep.duration:7.1f}s  {title}")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in _ACCEPTANCE:
        terminalreporter.write_line(line)
