from datetime import date, datetime, timedelta, timezone

import pytest

from cloudplus import scheme
from cloudplus.group import make_rng
from cloudplus.timecode import EpochConfig

GENESIS = date(2025, 1, 1)


def at(day: int) -> datetime:
    """UTC noon on epoch ``day``."""
    return datetime(2025, 1, 1, 12, tzinfo=timezone.utc) + timedelta(days=day)


@pytest.fixture
def rng():
    return make_rng(1234)


@pytest.fixture
def cfg():
    return EpochConfig(GENESIS, 1024)


@pytest.fixture
def system(cfg, rng):
    return scheme.setup("toy", None, cfg, rng)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
