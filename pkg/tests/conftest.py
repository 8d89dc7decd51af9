import numpy as np
import pytest

from cphase.gate import ideal_config, load_config

_ACCEPTANCE = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def ideal():
    return ideal_config()


@pytest.fixture
def experimental():
    return load_config("paper-experimental")


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    detail = dict(report.user_properties).get("detail", "")
    name = report.nodeid.split("::")[-1]
    _ACCEPTANCE.append((name, report.outcome.upper(), detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, detail in _ACCEPTANCE:
        line = f"[{'PASS' if outcome == 'PASSED' else 'FAIL'}] {name}"
        terminalreporter.write_line(f"{line}  {detail}" if detail else line)
