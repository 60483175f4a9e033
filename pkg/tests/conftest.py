import datetime as dt

import pytest

from mobweigh._time import StudyWindow, YearMonth
from mobweigh.synth import SynthConfig


@pytest.fixture
def window():
    return StudyWindow(YearMonth(2022, 2), YearMonth(2022, 10))


@pytest.fixture
def clean_cfg():
    """108 animals, full daily access, no measurement noise."""
    return SynthConfig(daily_access_prob=1.0, measurement_noise_sd=0.0, seed=11)


@pytest.fixture
def small_cfg():
    return SynthConfig(n_animals=12, seed=3)


def d(text: str) -> dt.date:
    return dt.date.fromisoformat(text)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
