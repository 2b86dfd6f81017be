import os
from datetime import date, timedelta

import hypothesis
import numpy as np
import pytest

from marginelo.backtest import walk_forward
from marginelo.league import synthetic_benchmark
from marginelo.ratings import GameRecord, Mode

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=500, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES: list[str] = []


def random_games(n, n_teams=8, seed=0, start=date(2001, 9, 1), per_date=1,
                 seasons=1, neutral_rate=0.1, max_points=45):
    """Random scored games, ``per_date`` of them on each date, split evenly over seasons."""
    rng = np.random.default_rng(seed)
    teams = [f"t{i}" for i in range(n_teams)]
    games = []
    n_days = -(-n // per_date)
    for k in range(n):
        day_index = k // per_date
        day = start + timedelta(days=day_index)
        season = 2001 + (day_index * seasons) // n_days
        h, a = rng.choice(n_teams, 2, replace=False)
        games.append(GameRecord(day, season, teams[h], teams[a],
                                int(rng.integers(0, max_points)),
                                int(rng.integers(0, max_points)),
                                bool(rng.random() < neutral_rate)))
    return games


@pytest.fixture(scope="session")
def bench():
    return synthetic_benchmark(seed=0)


@pytest.fixture(scope="session")
def self_consistency(bench):
    """Spread backtest of the trained book on the seasons it generated."""
    return walk_forward(bench.synthetic_games, None, Mode.SPREAD, book=bench.spread_book)


@pytest.fixture
def acceptance():
    def report(criterion, ok, detail):
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
