import numpy as np
import pytest

from symglm.problems import kepler
from symglm.tableau import SECTION6_METHODS, lookup, registry


@pytest.fixture(scope="session")
def kepler_problem():
    return kepler().ode()


@pytest.fixture(scope="session")
def glm_entries():
    return [lookup(n) for n in SECTION6_METHODS]


@pytest.fixture(scope="session")
def all_entries():
    return registry()


@pytest.fixture
def rng():
    return np.random.default_rng(42)


_CRITERIA: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    key = str(mark.args[0])
    ok = rep.passed or rep.skipped
    prev = _CRITERIA.get(key, (True, ""))
    reason = "" if rep.passed else rep.longrepr.reprcrash.message if hasattr(
        rep.longrepr, "reprcrash") else str(rep.longrepr)
    _CRITERIA[key] = (prev[0] and ok, prev[1] or reason)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA, key=lambda k: (int(k[0]), k)):
        ok, reason = _CRITERIA[key]
        line = f"criterion {key}: {'PASS' if ok else 'FAIL'}"
        terminalreporter.write_line(line + ("" if ok else f"  ({reason.splitlines()[0]})"))
