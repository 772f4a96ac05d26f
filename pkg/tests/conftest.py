"""Session fixtures plus the acceptance-criteria verdict summary."""

from __future__ import annotations

import pytest

import fixtures
from cloneaudit import pipeline

# criterion label -> True while every test carrying it has passed
_criteria: dict[str, bool] = {}


@pytest.fixture(scope="session")
def workspace(tmp_path_factory):
    """The planted dump/corpus/latest tree, untouched by any pipeline run."""
    return fixtures.build_workspace(tmp_path_factory.mktemp("planted"))


@pytest.fixture(scope="session")
def pipeline_workspace(tmp_path_factory):
    """A planted workspace run to completion: the first pass pauses for
    triage, the second finds the store and finishes."""
    ws = fixtures.build_workspace(tmp_path_factory.mktemp("planted-run"))
    cfg = pipeline.load_config(ws["config"])
    ws["manifest_first"] = pipeline.run_pipeline(cfg)
    ws["manifest_second"] = pipeline.run_pipeline(cfg)
    return ws


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or not marker.args:
        return
    label = marker.args[0]
    if report.when == "call":
        _criteria[label] = _criteria.get(label, True) and report.passed
    elif report.failed:  # setup/teardown error counts against the criterion
        _criteria[label] = False


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed in _criteria.items():
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{verdict}  {label}")
