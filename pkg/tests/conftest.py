import pytest

from lftnav.config import default_config_dict, parse_config
from lftnav.synthesis import dk_iterate, synthesize_hinf


@pytest.fixture(scope="session")
def scenario():
    return parse_config(default_config_dict())


@pytest.fixture(scope="session")
def hinf_gain(scenario):
    return synthesize_hinf(scenario.box, scenario.pi2, scenario.noise, grid_density=3)


@pytest.fixture(scope="session")
def dk_gain(scenario, hinf_gain):
    return dk_iterate(scenario.box, scenario.pi2, scenario.noise, initial=hinf_gain, cells=scenario.dk_cells)


ACCEPTANCE = []


@pytest.fixture(scope="session")
def verdict():
    """Record and print one acceptance line; returns ``ok`` for asserting."""

    def record(n, name, ok, detail):
        line = f"criterion {n} [{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        ACCEPTANCE.append((n, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
