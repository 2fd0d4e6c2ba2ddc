from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from csvm.core import ParseOptions, read_document

FIXTURES = Path(__file__).parent / "fixtures"

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def fixture_path():
    def get(name):
        return FIXTURES / name
    return get


@pytest.fixture
def load():
    def read(name, **opts):
        return read_document(FIXTURES / name, ParseOptions(**opts))
    return read


def pytest_terminal_summary(terminalreporter):
    lines = []
    for report in terminalreporter.stats.get("passed", []) + terminalreporter.stats.get("failed", []):
        if report.when != "call":
            continue
        props = dict(report.user_properties)
        if "criterion" in props:
            lines.append((props["criterion"], "PASS" if report.passed else "FAIL"))
    if not lines:
        return

    def order(item):
        num = item[0].split()[0]
        return (int("".join(c for c in num if c.isdigit())), num)

    terminalreporter.section("acceptance criteria")
    for name, status in sorted(lines, key=order):
        terminalreporter.write_line(f"[{status}] criterion {name}")
