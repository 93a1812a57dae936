import pathlib

import pytest

FIXTURES = pathlib.Path(__file__).parent / "fixtures"

_criteria: dict[str, list[str]] = {}


@pytest.fixture
def fixtures() -> pathlib.Path:
    return FIXTURES


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    criterion = getattr(report, "criterion", None)
    if criterion:
        _criteria.setdefault(criterion, []).append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker:
        report.criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, outcomes in _criteria.items():
        if "failed" in outcomes:
            status = "FAIL"
        elif all(o == "skipped" for o in outcomes):
            status = "SKIP"
        else:
            status = "PASS"
        terminalreporter.write_line(f"{status}  {criterion}  ({len(outcomes)} checks)")
