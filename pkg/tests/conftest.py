import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo", deadline=None, max_examples=25, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("repo")

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k, label): acceptance criterion number and label")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    # keep the call phase, or the setup phase when it failed or skipped
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        if hasattr(rep, "wasxfail"):
            verdict = "FAIL (expected, strict xfail)" if rep.skipped else "PASS (unexpected)"
        else:
            verdict = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        k, label = mark.args
        _CRITERIA[item.nodeid] = (k, label, verdict)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k, label, verdict in sorted(_CRITERIA.values(), key=lambda r: (r[0], r[1])):
        terminalreporter.write_line(f"criterion {k:>2} {label}: {verdict}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
