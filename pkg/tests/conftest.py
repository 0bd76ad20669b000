import sys
from pathlib import Path

import pytest

from groupform import load_dataset

ROOT = Path(__file__).resolve().parents[1]
GEMS = ROOT / "src" / "groupform" / "data" / "gems_of_the_aegean.json"

sys.path.insert(0, str(Path(__file__).parent))

_acceptance: list[tuple[str, str, str]] = []


@pytest.fixture(scope="session")
def gems_path():
    return GEMS


@pytest.fixture(scope="session")
def gems(gems_path):
    return load_dataset(gems_path)


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        _acceptance.append((name, report.outcome, report.head_line or ""))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, _ in _acceptance:
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{mark}  {name}")
