from __future__ import annotations

import pytest

from gridflex.fixtures import FIXTURES

_ACCEPTANCE: dict[str, str] = {}


def pytest_runtest_logreport(report):
    name = getattr(report, "acceptance_name", None)
    if name is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        outcome = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        if _ACCEPTANCE.get(name) != "FAIL":
            _ACCEPTANCE[name] = outcome


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        outcome.get_result().acceptance_name = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE.items():
        terminalreporter.write_line(f"{outcome}  {name}")


@pytest.fixture(params=sorted(FIXTURES))
def fixture_name(request):
    return request.param
