import time
from collections import defaultdict
from importlib.resources import files

import pytest

from mfxap.cli import format_csv
from mfxap.config import load_spec
from mfxap.sim import run_experiment

CONFIG_DIR = files("mfxap") / "configs"
DESK = ("fig3_desk", "fig4_desk", "fig5_desk")

_CRITERIA = {}
_OUTCOMES = defaultdict(list)


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _CRITERIA[item.nodeid] = mark.args


def pytest_runtest_logreport(report):
    if report.nodeid not in _CRITERIA:
        return
    if report.when == "call" or report.outcome != "passed":
        _OUTCOMES[_CRITERIA[report.nodeid]].append((report.outcome, report.nodeid.split("::")[-1]))


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_OUTCOMES):
        number, title = key
        results = _OUTCOMES[key]
        outcomes = {o for o, _ in results}
        if "failed" in outcomes:
            verdict = "FAIL"
        elif outcomes == {"skipped"}:
            verdict = "SKIP"
        else:
            verdict = "PASS"
        terminalreporter.write_line(f"criterion {number}: {verdict}  {title}")
        for outcome, name in results:
            if outcome != "passed":
                terminalreporter.write_line(f"    {outcome}: {name}")


class DeskRun:
    """One shipped desk config, run once per session."""

    def __init__(self, name):
        self.name = name
        self.path = CONFIG_DIR / f"{name}.cfg"
        self.spec = load_spec(self.path)
        t0 = time.perf_counter()
        self.result = run_experiment(self.spec)
        self.seconds = time.perf_counter() - t0
        self.csv = format_csv(self.result.curves, self.spec.decimation)
        self.summary = self.result.summary(thresholds=(-20.0, -30.0))


_RUNS = {}


@pytest.fixture(scope="session")
def desk_run():
    def get(name):
        if name not in _RUNS:
            _RUNS[name] = DeskRun(name)
        return _RUNS[name]
    return get
