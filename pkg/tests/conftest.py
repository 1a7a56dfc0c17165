from __future__ import annotations

from datetime import datetime, timedelta

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tvsched.viewdata import N_CELLS, ViewershipRecord, ViewershipSeries

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

T0 = datetime(2014, 10, 23, 5)


def make_series(count_rows, channel="7287", program="P1", missing=(), start=T0) -> ViewershipSeries:
    """Series from a list of 30-vectors (or scalars put in cell 0); ``missing`` indexes are gaps."""
    records = []
    for t, row in enumerate(count_rows):
        counts = np.zeros(N_CELLS, np.int64)
        if np.ndim(row) == 0:
            counts[0] = row
        else:
            counts[:] = row
        records.append(ViewershipRecord(start + t * timedelta(hours=1), channel, program, counts,
                                        missing=t in missing))
    return ViewershipSeries(channel, tuple(records))


@pytest.fixture
def rng():
    return np.random.default_rng(20141023)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
