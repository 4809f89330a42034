import time

import pytest

from cukpllf.converter import equilibrium
from cukpllf.metrics import compute_metrics
from cukpllf.scenarios import BASE_OP, BASE_PARAMS, PRESETS
from cukpllf.sim import run_simulation


class PresetRun:
    def __init__(self, name):
        scenario = PRESETS[name]
        self.scenario = scenario
        self.poly = scenario.polytope()
        self.equil = equilibrium(scenario.params, scenario.op_spec)
        start = time.perf_counter()
        self.trace, self.events = run_simulation(
            scenario.params, scenario.op_spec, self.poly, scenario.sim
        )
        self.wall_time = time.perf_counter() - start
        self.metrics = compute_metrics(self.trace, self.events, self.poly, self.equil)


@pytest.fixture(scope="session")
def preset_runs():
    """Lazily simulated built-in scenarios, shared across the session."""
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = PresetRun(name)
        return cache[name]

    return get


@pytest.fixture
def params():
    return BASE_PARAMS


@pytest.fixture
def op():
    return BASE_OP


_CRITERIA = {}


@pytest.fixture
def report():
    """Record one acceptance verdict; all verdicts are echoed at the end of the session."""

    def record(number, title, passed, detail):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        _CRITERIA[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[number])
