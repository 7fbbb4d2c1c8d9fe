import numpy as np
import pytest

_outcomes: dict[int, list[bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not rep.failed:
        return
    _outcomes.setdefault(mark.args[0], []).append(rep.passed or rep.skipped)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num in sorted(_outcomes):
        ok = all(_outcomes[num])
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
