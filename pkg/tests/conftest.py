import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    num, title = marker.args
    store = item.config._criteria
    failed = rep.failed or (rep.when == "call" and rep.outcome != "passed")
    _, ok, details = store.get(num, (title, True, []))
    if rep.when == "call":
        details = details + [f"{k}={v}" for k, v in item.user_properties]
    if rep.when == "call" or failed:
        store[num] = (title, ok and not failed, details)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = getattr(config, "_criteria", {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(store):
        title, ok, detail = store[num]
        line = f"criterion {num:>2} {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  [{'; '.join(detail)}]"
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
