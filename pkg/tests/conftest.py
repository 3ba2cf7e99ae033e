import time

import pytest

# criterion number -> (description, outcome, seconds)
_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, description): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_call(item):
    start = time.perf_counter()
    yield
    item.user_properties.append(("elapsed", time.perf_counter() - start))


def pytest_runtest_logreport(report):
    marker = getattr(report, "_acceptance", None)
    if marker is None or (report.when != "call" and report.passed):
        return
    number, desc = marker
    elapsed = dict(report.user_properties).get("elapsed", 0.0)
    prev = _ACCEPTANCE.get(number)
    outcome = "PASS" if report.passed else "FAIL"
    if prev is None or prev[1] == "PASS":
        _ACCEPTANCE[number] = (desc, outcome, elapsed)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("acceptance")
    if m is not None:
        rep._acceptance = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        desc, outcome, elapsed = _ACCEPTANCE[number]
        tr.write_line(f"criterion {number}: {outcome}  {desc} ({elapsed:.2f} s)")
