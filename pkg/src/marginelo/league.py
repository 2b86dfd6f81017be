"""Synthetic leagues with known ground truth.

The Poisson toy league draws each team's score from its own Poisson law,
which makes the true head-to-head win rate available in closed form.  The
synthetic-season generator instead samples outcomes from a rating book's own
predictions, for self-consistency checks of the backtest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import poisson

from .distribution import Pmf, integer_pmf, predict_survival
from .ratings import GameRecord, HyperParams, MarginLattice, Mode, RatingBook, win_probability

TOY_LAMBDAS = (11, 13, 15, 17, 19, 21, 23, 25, 27)
TOY_PARAMS = HyperParams(kappa=0.005, sigma=300.0, r0=1500.0, r_hfa=0.0,
                         regress_fraction=1.0, tie_credit=0.5)
TOY_START = date(2000, 1, 1)


@dataclass(frozen=True)
class PoissonTeam:
    label: str
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"Poisson mean must be positive, got {self.lam}")


def exact_poisson_win_rate(lambda_a: float, lambda_b: float, tol: float = 1e-12) -> float:
    """P(A > B) + 1/2 P(A = B) for independent Poisson scores."""
    if not (lambda_a > 0 and lambda_b > 0):
        raise ValueError("Poisson means must be positive")
    kmax = int(max(poisson.isf(tol * 1e-2, lambda_a), poisson.isf(tol * 1e-2, lambda_b))) + 2
    k = np.arange(kmax + 1)
    pa = poisson.pmf(k, lambda_a)
    pb = poisson.pmf(k, lambda_b)
    cdf_b = np.cumsum(pb)
    return float(np.dot(pa[1:], cdf_b[:-1]) + 0.5 * np.dot(pa, pb))


@dataclass
class ToyLeagueResult:
    teams: list[PoissonTeam]
    params: HyperParams
    n_games: int
    reference: int
    game_index: np.ndarray  # games played when each snapshot was taken
    ratings: np.ndarray     # snapshots x teams
    final: np.ndarray
    home: np.ndarray
    away: np.ndarray
    home_points: np.ndarray
    away_points: np.ndarray

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([t.lam for t in self.teams])

    @property
    def predicted(self) -> np.ndarray:
        """Win rate of every team against the reference team at each snapshot."""
        gap = self.ratings - self.ratings[:, [self.reference]]
        return win_probability(gap, self.params.sigma)

    @property
    def oracle(self) -> np.ndarray:
        ref = self.teams[self.reference].lam
        return np.array([exact_poisson_win_rate(t.lam, ref) for t in self.teams])

    def tail_average(self, fraction: float = 0.1) -> np.ndarray:
        keep = self.game_index > (1 - fraction) * self.n_games
        return self.predicted[keep].mean(axis=0)

    def max_error(self, fraction: float = 0.1) -> float:
        return float(np.max(np.abs(self.tail_average(fraction) - self.oracle)))

    def games(self) -> list[GameRecord]:
        """The simulated stream, one game per day, all in season 1."""
        labels = [t.label for t in self.teams]
        return [GameRecord(TOY_START + timedelta(days=k), 1, labels[h], labels[a], int(x), int(y))
                for k, (h, a, x, y) in enumerate(zip(self.home.tolist(), self.away.tolist(),
                                                   self.home_points.tolist(),
                                                   self.away_points.tolist()))]

    def book(self) -> RatingBook:
        lattice = MarginLattice((0.0,))
        book = RatingBook.flat(Mode.SPREAD, lattice, self.params, track_history=False)
        for t, r in zip(self.teams, self.final):
            book.current[t.label] = np.array([r])
        book.last_date = TOY_START + timedelta(days=self.n_games - 1)
        book.last_season = 1
        return book

    def trajectory_rows(self):
        """(game index, team, predicted rate, oracle rate) rows."""
        pred, oracle = self.predicted, self.oracle
        for k, g in enumerate(self.game_index.tolist()):
            for i, t in enumerate(self.teams):
                yield g, t.label, float(pred[k, i]), float(oracle[i])


def _team_list(lambdas) -> list[PoissonTeam]:
    out = []
    for i, lam in enumerate(lambdas):
        out.append(lam if isinstance(lam, PoissonTeam) else PoissonTeam(f"T{i:02d}", float(lam)))
    return out


def run_toy_league(lambdas: Sequence = TOY_LAMBDAS, n_games: int = 2_000_000,
                   params: HyperParams = TOY_PARAMS, seed: int = 0, record_every: int = 1000,
                   reference_lambda: float | None = None) -> ToyLeagueResult:
    """Binary win/loss Elo on random pairings of Poisson-scoring teams.

    Every team starts at ``r0``.  The reference opponent is the team whose
    mean equals ``reference_lambda`` (default: the league mean), falling back
    to the team closest to it.
    """
    teams = _team_list(lambdas)
    if len(teams) < 2:
        raise ValueError("need at least two teams")
    if n_games < 1:
        raise ValueError("need at least one game")
    lam = np.array([t.lam for t in teams])
    ref_lam = float(lam.mean()) if reference_lambda is None else float(reference_lambda)
    reference = int(np.argmin(np.abs(lam - ref_lam)))

    rng = np.random.default_rng(seed)
    n_teams = len(teams)
    home = rng.integers(0, n_teams, n_games)
    away = rng.integers(0, n_teams - 1, n_games)
    away += away >= home
    hp = rng.poisson(lam[home])
    ap = rng.poisson(lam[away])
    outcome = np.where(hp > ap, 1.0, np.where(hp == ap, params.tie_credit, 0.0))

    ratings = [params.r0] * n_teams
    kappa, scale, erf = params.kappa, math.sqrt(2.0) * params.sigma, math.erf
    snaps, index = [], []
    for k, (h, a, o) in enumerate(zip(home.tolist(), away.tolist(), outcome.tolist()), 1):
        d = kappa * (o - 0.5 * (1.0 + erf((ratings[h] - ratings[a]) / scale)))
        ratings[h] += d
        ratings[a] -= d
        if k % record_every == 0 or k == n_games:
            snaps.append(list(ratings))
            index.append(k)
    return ToyLeagueResult(teams, params, n_games, reference, np.array(index), np.array(snaps),
                           np.array(ratings), home, away, hp, ap)


# -- synthetic seasons -------------------------------------------------------

def round_robin_schedule(teams: Sequence[str], season: int, start: date,
                         double: bool = True, days_between: int = 7) -> list[GameRecord]:
    """Circle-method round robin; each round is one date, each team plays once per round."""
    names = list(teams)
    if len(names) % 2:
        names.append(None)
    n = len(names)
    rounds = []
    order = names[:]
    for _ in range(n - 1):
        pairs = []
        for i in range(n // 2):
            a, b = order[i], order[n - 1 - i]
            if a is not None and b is not None:
                pairs.append((a, b) if (len(rounds) + i) % 2 == 0 else (b, a))
        rounds.append(pairs)
        order = [order[0], order[-1]] + order[1:-1]
    if double:
        rounds += [[(b, a) for a, b in r] for r in rounds]
    games = []
    for k, pairs in enumerate(rounds):
        day = start + timedelta(days=k * days_between)
        games.extend(GameRecord(day, season, h, a) for h, a in pairs)
    return games


def poisson_season(lambdas: Mapping[str, float], schedule: Sequence[GameRecord], seed: int,
                   home_bonus: float = 0.0) -> list[GameRecord]:
    """Fill a schedule with Poisson scores; the home side gets ``home_bonus`` extra mean."""
    rng = np.random.default_rng(seed)
    out = []
    for g in schedule:
        hp = int(rng.poisson(lambdas[g.home] + (0.0 if g.neutral_site else home_bonus)))
        ap = int(rng.poisson(lambdas[g.away]))
        out.append(GameRecord(g.date, g.season, g.home, g.away, hp, ap, g.neutral_site))
    return out


def _draw(pmf: Pmf, rng: np.random.Generator) -> int:
    cdf = np.cumsum(pmf.masses)
    i = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return int(round(pmf.support[min(i, pmf.support.size - 1)]))


def scores_from_spread_total(spread: int, total: int) -> tuple[int, int]:
    if (total - spread) % 2 or total < abs(spread):
        raise ValueError(f"spread {spread} and total {total} are not a valid score")
    return (total + spread) // 2, (total - spread) // 2


def sample_game(spread_pmf: Pmf, total_pmf: Pmf, rng: np.random.Generator,
                max_retries: int = 100) -> tuple[int, int]:
    """Draw (home, away) points from independent spread and total laws.

    The spread draw is kept.  Totals with the wrong parity or below the
    absolute spread are redrawn; after ``max_retries`` the total is moved to
    the nearest valid value.
    """
    spread = _draw(spread_pmf, rng)
    for _ in range(max_retries + 1):
        total = _draw(total_pmf, rng)
        if total >= abs(spread) and (total - spread) % 2 == 0:
            return scores_from_spread_total(spread, total)
    total = max(total, abs(spread))
    total += (total - spread) % 2
    return scores_from_spread_total(spread, total)


def generate_synthetic_season(spread_book: RatingBook, total_book: RatingBook,
                              schedule: Sequence[GameRecord], seed: int) -> list[GameRecord]:
    """Score a schedule by sampling from the books' own predictions (books are not updated)."""
    rng = np.random.default_rng(seed)
    out = []
    for g in schedule:
        s_curve = predict_survival(spread_book, g.home, g.away, g.date, g.neutral_site)
        t_curve = predict_survival(total_book, g.home, g.away, g.date, g.neutral_site)
        hp, ap = sample_game(integer_pmf(s_curve), integer_pmf(t_curve), rng)
        out.append(GameRecord(g.date, g.season, g.home, g.away, hp, ap, g.neutral_site))
    return out


@dataclass
class SyntheticBenchmark:
    """A Poisson league, books trained on it, and seasons sampled from those books."""

    lambdas: dict[str, float]
    train_games: list[GameRecord]
    spread_book: RatingBook
    total_book: RatingBook
    synthetic_games: list[GameRecord]


def train_books(games: Sequence[GameRecord], spread_params: HyperParams,
                total_params: HyperParams, pool: Sequence[GameRecord] | None = None,
                half_width: int = 50, step: float = 1.0) -> tuple[RatingBook, RatingBook]:
    """Spread and total books initialised from ``pool`` then rated on ``games``."""
    from .calibration import default_lattice, initial_book

    pool = list(games if pool is None else pool)
    books = []
    for mode, params in ((Mode.SPREAD, spread_params), (Mode.TOTAL, total_params)):
        lattice = default_lattice(mode, pool, half_width, step)
        book = initial_book(pool, mode, params, lattice, track_history=False)
        books.append(book.rate_games(games))
    return books[0], books[1]


def synthetic_benchmark(seed: int = 0, n_teams: int = 16, train_seasons: int = 10,
                        synthetic_seasons: int = 5, lambda_range=(12.0, 30.0),
                        home_bonus: float = 2.0, kappa: float = 5.0, r_hfa: float = 54.0,
                        first_season: int = 2000) -> SyntheticBenchmark:
    """Heterogeneous Poisson league with a home edge, for self-consistency tests.

    Training seasons are Poisson scores on double round robins; the first
    season seeds the min-bias initial ratings.  The synthetic seasons that
    follow are sampled from the trained books, which play the role of truth.
    """
    teams = [f"team{i:02d}" for i in range(n_teams)]
    lambdas = dict(zip(teams, np.linspace(*lambda_range, n_teams).tolist()))
    train = []
    for s in range(train_seasons):
        season = first_season + s
        schedule = round_robin_schedule(teams, season, date(season, 9, 1))
        train += poisson_season(lambdas, schedule, seed + s, home_bonus)
    sp = HyperParams(kappa=kappa, r_hfa=r_hfa, regress_fraction=1.0)
    tp = HyperParams(kappa=kappa, r_hfa=0.0, regress_fraction=1.0)
    first = [g for g in train if g.season == first_season]
    spread_book, total_book = train_books(train, sp, tp, pool=first)
    synthetic = []
    for s in range(synthetic_seasons):
        season = first_season + train_seasons + s
        schedule = round_robin_schedule(teams, season, date(season, 9, 1))
        synthetic += generate_synthetic_season(spread_book, total_book, schedule,
                                               seed + 1000 + s)
    return SyntheticBenchmark(lambdas, train, spread_book, total_book, synthetic)


def offset_league(bench: SyntheticBenchmark, offset: float, seasons: int = 42,
                  seed: int = 0, first_season: int = 3000) -> tuple[list[GameRecord], RatingBook]:
    """Seasons sampled from the benchmark books with the spread home offset set to ``offset``.

    Returns the games and the spread book that generated them.
    """
    spread_book = bench.spread_book.copy()
    spread_book.params = spread_book.params.replace(r_hfa=float(offset))
    teams = sorted(bench.lambdas)
    games = []
    for s in range(seasons):
        season = first_season + s
        schedule = round_robin_schedule(teams, season, date(season, 9, 1))
        games += generate_synthetic_season(spread_book, bench.total_book, schedule, seed + s)
    return games, spread_book
