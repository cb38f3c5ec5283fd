import numpy as np
import pytest

from iotids.features import WindowSpec, extract_windows
from iotids.simulator import ScenarioConfig, simulate

XOR_X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=float)
XOR_Y = np.array([0, 1, 1, 0], dtype=float)


@pytest.fixture(scope="session")
def default_trace():
    return simulate(ScenarioConfig())


@pytest.fixture(scope="session")
def default_samples(default_trace):
    return extract_windows(default_trace, WindowSpec())


@pytest.fixture
def small_scenario():
    return ScenarioConfig(duration_s=20.0, attack_start_s=5.0, attack_end_s=12.0,
                          flood_rate_pps=200.0, n_attackers=2, seed=7)


# acceptance reporting: one PASS/FAIL line per criterion ---------------------

_criteria: dict[int, dict] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when not in ("setup", "call"):
        return
    number, title = marker.args
    entry = _criteria.setdefault(number, {"title": title, "ok": True, "details": []})
    if report.failed:
        entry["ok"] = False
    if report.when == "call":
        entry["details"].extend(v for k, v in item.user_properties if k == "detail")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        status = "PASS" if entry["ok"] else "FAIL"
        detail = "; ".join(entry["details"])
        terminalreporter.write_line(f"[{status}] {number}. {entry['title']}" + (f" -- {detail}" if detail else ""))
