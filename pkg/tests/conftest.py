from pathlib import Path

import pytest

from phgen.device import IsfetDevice
from phgen.readout import CvccParams

DATA = Path(__file__).resolve().parents[1] / "src" / "phgen" / "data"

# Table III, rows 0000..1111 (SW3 SW2 SW1 SW0)
TABLE3_CORRECT = "0110000000000110"
TABLE3_WRONG = "1001000000001001"


@pytest.fixture(scope="session")
def device():
    return IsfetDevice()


@pytest.fixture(scope="session")
def cvcc():
    return CvccParams()


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def demo_locked_text():
    return (DATA / "demo_locked.bench").read_text()


@pytest.fixture
def demo_core_text():
    return (DATA / "demo_core.bench").read_text()


_acceptance = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "acceptance" in report.keywords:
        name = report.nodeid.split("::")[-1]
        _acceptance.append((name, report.outcome, report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, duration in _acceptance:
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {name}  ({duration:.3f} s)")
