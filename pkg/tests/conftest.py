from collections import OrderedDict

import pytest

from fsipp.fixtures import BUILDERS
from fsipp.relax import solve_hierarchy

_HIERARCHIES: dict = {}
_CRITERIA: "OrderedDict[int, list]" = OrderedDict()

PLANAR_FIXTURES = ("box_ellipse", "ball_ellipse", "sphere_disk", "triangle")


def hierarchy(name: str, kmax: int = 8):
    """k = 1..kmax with diagnostics, computed once per session."""
    key = (name, kmax)
    if key not in _HIERARCHIES:
        _HIERARCHIES[key] = solve_hierarchy(BUILDERS[name](), kmax=kmax, diagnostics=True)
    return _HIERARCHIES[key]


@pytest.fixture(scope="session")
def runs():
    return {name: hierarchy(name) for name in PLANAR_FIXTURES}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for mark in getattr(report, "criteria", ()):
        _CRITERIA.setdefault(mark, []).append((report.nodeid, report.outcome))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    rep.criteria = [m.args[0] for m in item.iter_markers("criterion")]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        results = _CRITERIA[num]
        bad = [nodeid.split("::")[-1] for nodeid, out in results if out != "passed"]
        verdict = "PASS" if not bad else "FAIL"
        detail = f" ({', '.join(bad)})" if bad else ""
        terminalreporter.write_line(f"criterion {num}: {verdict}{detail}")
