"""Collects acceptance outcomes and prints one line per criterion at the end of the run."""

import pytest

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(k): acceptance criterion number k")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when not in ("setup", "call"):
        return
    if report.when == "setup" and report.passed:
        return
    k = marker.args[0]
    details = [v for name, v in item.user_properties if name == "detail"]
    _ACCEPTANCE[k] = (report.passed, "; ".join(details) or report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[k]
        terminalreporter.write_line(
            f"ACCEPTANCE criterion {k}: {'PASS' if passed else 'FAIL'} {detail}"
        )
