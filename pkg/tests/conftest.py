import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURE_DIR = Path(__file__).resolve().parents[1] / "src" / "botgraph" / "data" / "fixture"

_acceptance = {}


@pytest.fixture
def fixture_dir():
    return FIXTURE_DIR


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for mark in report.keywords:
        if mark.startswith("AC") and mark[2:].isdigit():
            ok = report.outcome == "passed"
            prev = _acceptance.get(mark, True)
            _acceptance[mark] = prev and ok


def pytest_configure(config):
    for i in range(1, 10):
        config.addinivalue_line("markers", f"AC{i}: acceptance criterion {i}")


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for mark in sorted(_acceptance, key=lambda m: int(m[2:])):
        terminalreporter.write_line(f"{mark}: {'PASS' if _acceptance[mark] else 'FAIL'}")
