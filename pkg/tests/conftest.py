"""Collects one PASS/FAIL line per acceptance criterion for the run summary."""

import pytest

_RESULTS: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when not in ("setup", "call"):
        return
    number, text = mark.args
    if report.failed:
        _RESULTS[number] = ("FAIL", text)
    elif report.when == "call" and report.passed:
        _RESULTS.setdefault(number, ("PASS", text))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        status, text = _RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {text}")
