import numpy as np
import pytest

from magicspread.models import haar_random_state


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def random_state(rng):
    def make(num_qubits):
        return haar_random_state(num_qubits, rng)
    return make


# -- acceptance summary -----------------------------------------------------------------
# Tests tagged @pytest.mark.criterion(n) are folded into one PASS/FAIL line per criterion.

_criteria: dict[str, int] = {}
_outcomes: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _criteria[item.nodeid] = int(mark.args[0])


def pytest_runtest_logreport(report):
    n = _criteria.get(report.nodeid)
    if n is None:
        return
    if report.when == "call" or report.failed or report.skipped:
        details = [f"{k}={v}" for k, v in report.user_properties]
        outcome = "xfailed" if report.skipped and hasattr(report, "wasxfail") else report.outcome
        _outcomes.setdefault(n, []).append((outcome, details))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        results = _outcomes[n]
        ok = all(outcome == "passed" for outcome, _ in results)
        if ok:
            verdict = "PASS"
        elif all(o == "skipped" for o, _ in results):
            verdict = "SKIP"
        elif all(o in ("passed", "xfailed") for o, _ in results):
            verdict = "FAIL (known, xfail)"
        else:
            verdict = "FAIL"
        details = "; ".join(d for _, ds in results for d in ds)
        terminalreporter.write_line(f"criterion {n:2d}: {verdict}  {details}")
