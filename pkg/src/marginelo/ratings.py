"""Per-line Elo ratings for point spreads and point totals.

Each team carries one rating per handicap line.  A game played at line ``n``
pairs the home team's rating at ``n`` with the away team's rating at the
mirrored line, so a single sweep over a symmetric lattice trains both the
handicapped and the advantaged copies of every team.
"""

from __future__ import annotations

import copy
import enum
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from datetime import date
from itertools import groupby
from typing import Iterable, Sequence

import numpy as np
from scipy.special import erf

SQRT2 = math.sqrt(2.0)


class UnplayedGameError(ValueError):
    """Raised when a score-dependent operation meets a scheduled game."""


class OrderingError(ValueError):
    """Raised when games arrive out of date order."""


class UnknownTeamError(KeyError):
    def __init__(self, team: str, known: Iterable[str] = ()):
        self.team = team
        self.known = sorted(known)
        super().__init__(team)

    def __str__(self) -> str:
        known = ", ".join(self.known) if self.known else "none"
        return f"unknown team {self.team!r}; known teams: {known}"


class Mode(str, enum.Enum):
    SPREAD = "spread"
    TOTAL = "total"


@dataclass(frozen=True)
class GameRecord:
    date: date
    season: int
    home: str
    away: str
    home_points: int | None = None
    away_points: int | None = None
    neutral_site: bool = False

    def __post_init__(self):
        for pts in (self.home_points, self.away_points):
            if pts is not None and (int(pts) != pts or pts < 0):
                raise ValueError(f"points must be nonnegative integers, got {pts!r}")
        if (self.home_points is None) != (self.away_points is None):
            raise ValueError("either both scores or neither must be present")
        if self.home == self.away:
            raise ValueError(f"team {self.home!r} cannot play itself")

    @property
    def played(self) -> bool:
        return self.home_points is not None


def comparison_value(game: GameRecord, mode: Mode) -> float:
    """Home-perspective outcome: spread (home - away) or total (home + away)."""
    if not game.played:
        raise UnplayedGameError(
            f"unplayed game {game.home} vs {game.away} on {game.date}")
    if Mode(mode) is Mode.SPREAD:
        return float(game.home_points - game.away_points)
    return float(game.home_points + game.away_points)


def win_probability(rating_diff, sigma: float = 300.0):
    """Normal-CDF probability that a side with ``rating_diff`` advantage wins."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return 0.5 * (1.0 + erf(np.asarray(rating_diff, dtype=float) / (SQRT2 * sigma)))


def observed_outcome(value, line, tie_credit: float = 0.5):
    """1 for a cover, ``tie_credit`` for a push, 0 otherwise."""
    value = np.asarray(value, dtype=float)
    line = np.asarray(line, dtype=float)
    out = np.where(value > line, 1.0, np.where(value == line, tie_credit, 0.0))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class HyperParams:
    kappa: float = 10.0
    sigma: float = 300.0
    r0: float = 1500.0
    r_hfa: float = 0.0
    regress_fraction: float = 1.0
    tie_credit: float = 0.5

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not self.r_hfa >= 0:
            raise ValueError(f"r_hfa must be nonnegative, got {self.r_hfa}")
        if not 0 <= self.regress_fraction <= 1:
            raise ValueError(f"regress_fraction must be in [0, 1], got {self.regress_fraction}")
        if not 0 <= self.tie_credit <= 1:
            raise ValueError(f"tie_credit must be in [0, 1], got {self.tie_credit}")
        if not math.isfinite(self.r0):
            raise ValueError("r0 must be finite")

    @classmethod
    def default(cls, mode: Mode) -> "HyperParams":
        """Defaults per mode: 54 Elo points of home advantage and 60% retention for
        spreads, no home advantage and 70% retention for totals."""
        if Mode(mode) is Mode.SPREAD:
            return cls(r_hfa=54.0, regress_fraction=0.6)
        return cls(r_hfa=0.0, regress_fraction=0.7)

    def replace(self, **changes) -> "HyperParams":
        return replace(self, **changes)


def update_pair(r_team, r_opp, p_obs, params: HyperParams, home_flag: bool = False):
    """Elo bounty exchange between a team and its opponent.

    ``home_flag`` adds the home-field offset to the team's side of the gap.
    Works elementwise on arrays of per-line ratings.
    """
    hfa = params.r_hfa if home_flag else 0.0
    p_exp = win_probability(np.asarray(r_team) - np.asarray(r_opp) + hfa, params.sigma)
    delta = params.kappa * (np.asarray(p_obs, dtype=float) - p_exp)
    return r_team + delta, r_opp - delta


@dataclass(frozen=True)
class MarginLattice:
    """Strictly increasing handicap lines, symmetric about ``center``."""

    lines: tuple[float, ...]
    center: float = 0.0

    def __post_init__(self):
        lines = np.asarray(self.lines, dtype=float)
        if lines.ndim != 1 or lines.size == 0:
            raise ValueError("lattice needs at least one line")
        if np.any(np.diff(lines) <= 0):
            raise ValueError("lattice lines must be strictly increasing")
        if not np.allclose(lines + lines[::-1], 2 * self.center, rtol=0, atol=1e-9):
            raise ValueError("lattice must be symmetric about its center")
        if lines.size % 2 == 0:
            raise ValueError("lattice must contain its center line")
        object.__setattr__(self, "lines", tuple(float(x) for x in lines))
        lines.flags.writeable = False
        object.__setattr__(self, "_values", lines)

    @classmethod
    def symmetric(cls, center: float = 0.0, half_width: int = 50, step: float = 1.0):
        offsets = step * np.arange(-half_width, half_width + 1)
        return cls(tuple(center + offsets), float(center))

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def offsets(self) -> np.ndarray:
        return self.values - self.center

    def __len__(self) -> int:
        return len(self.lines)

    def index(self, line: float) -> int:
        idx = np.flatnonzero(np.isclose(self.values, line, rtol=0, atol=1e-9))
        if idx.size == 0:
            raise IndexError(f"line {line} is not on the lattice "
                             f"[{self.lines[0]}, {self.lines[-1]}]")
        return int(idx[0])

    def mirror_index(self, i: int) -> int:
        return len(self.lines) - 1 - i

    def mirror(self, line: float) -> float:
        return self.lines[self.mirror_index(self.index(line))]


def _game_key(g: GameRecord):
    return (g.home, g.away, g.home_points, g.away_points, g.neutral_site)


def _group_by_date(games: Iterable[GameRecord]):
    for day, group in groupby(games, key=lambda g: g.date):
        yield day, list(group)


@dataclass
class RatingBook:
    """Current and historical per-line ratings for one comparison mode.

    ``initial`` holds the per-line ratings given to teams on first appearance;
    it is also the anchor for offseason regression.
    """

    mode: Mode
    lattice: MarginLattice
    params: HyperParams
    initial: np.ndarray
    current: dict[str, np.ndarray] = field(default_factory=dict)
    history: dict[str, list[tuple[date, np.ndarray]]] = field(default_factory=dict)
    last_date: date | None = None
    last_season: int | None = None
    track_history: bool = True

    def __post_init__(self):
        self.mode = Mode(self.mode)
        self.initial = np.asarray(self.initial, dtype=float)
        if self.initial.shape != (len(self.lattice),):
            raise ValueError("initial ratings must have one value per lattice line")

    @classmethod
    def flat(cls, mode: Mode, lattice: MarginLattice, params: HyperParams, **kw):
        """Book whose new teams all start at ``r0`` on every line."""
        return cls(mode, lattice, params, np.full(len(lattice), params.r0), **kw)

    @property
    def teams(self) -> list[str]:
        return sorted(self.current)

    def copy(self) -> "RatingBook":
        return copy.deepcopy(self)

    def ensure(self, team: str) -> np.ndarray:
        if team not in self.current:
            self.current[team] = self.initial.copy()
            if self.track_history:
                self.history[team] = []
        return self.current[team]

    def ratings(self, team: str) -> np.ndarray:
        try:
            return self.current[team]
        except KeyError:
            raise UnknownTeamError(team, self.current) from None

    def rating(self, team: str, line: float) -> float:
        return float(self.ratings(team)[self.lattice.index(line)])

    def rating_gaps(self, home: str, away: str, neutral: bool = False) -> np.ndarray:
        """Home rating at every line minus away rating at the mirrored line."""
        gap = self.ratings(home) - self.ratings(away)[::-1]
        if not neutral:
            gap = gap + self.params.r_hfa
        return gap

    def expected_outcome(self, home: str, away: str, line: float,
                         neutral: bool = False) -> float:
        i = self.lattice.index(line)
        return float(win_probability(self.rating_gaps(home, away, neutral)[i],
                                     self.params.sigma))

    def line_probabilities(self, home: str, away: str, neutral: bool = False) -> np.ndarray:
        return win_probability(self.rating_gaps(home, away, neutral), self.params.sigma)

    def regress(self, fraction: float | None = None) -> None:
        fraction = self.params.regress_fraction if fraction is None else fraction
        if not 0 <= fraction <= 1:
            raise ValueError(f"fraction must be in [0, 1], got {fraction}")
        if fraction == 1:
            return
        for team, r in self.current.items():
            self.current[team] = self.initial + fraction * (r - self.initial)

    def advance_season(self, season: int) -> None:
        """Apply the offseason regression once when ``season`` is new to the book."""
        if self.last_season is not None and season != self.last_season:
            if season < self.last_season:
                raise OrderingError(f"season {season} follows season {self.last_season}")
            self.regress()
        self.last_season = season

    def _deltas(self, game: GameRecord) -> np.ndarray:
        value = comparison_value(game, self.mode)
        p_obs = observed_outcome(value, self.lattice.values, self.params.tie_credit)
        p_exp = self.line_probabilities(game.home, game.away, game.neutral_site)
        return self.params.kappa * (p_obs - p_exp)

    def rate_date(self, games: Sequence[GameRecord]) -> list[np.ndarray]:
        """Rate games sharing one date as simultaneous.

        All expectations come from the book as it stood before the date; the
        per-game deltas are returned (home side, indexed by home line).
        """
        if not games:
            return []
        day = games[0].date
        if any(g.date != day for g in games):
            raise ValueError("rate_date requires games from a single date")
        if self.last_date is not None and day < self.last_date:
            raise OrderingError(f"game dated {day} arrives after {self.last_date}")
        for g in games:
            if not g.played:
                raise UnplayedGameError(f"unplayed game {g.home} vs {g.away} on {g.date}")
        season = max(g.season for g in games)
        self.advance_season(season)
        for g in games:
            self.ensure(g.home)
            self.ensure(g.away)

        deltas = [self._deltas(g) for g in games]
        changes: dict[str, np.ndarray] = defaultdict(lambda: 0.0)
        # canonical summation order keeps results bitwise independent of input order
        order = sorted(range(len(games)), key=lambda k: _game_key(games[k]))
        for g, d in ((games[k], deltas[k]) for k in order):
            changes[g.home] = changes[g.home] + d
            # away rating at the mirror of each home line loses what home gains
            changes[g.away] = changes[g.away] - d[::-1]
        for team in sorted(changes):
            change = changes[team]
            self.current[team] = self.current[team] + change
            if self.track_history:
                self.history[team].append((day, self.current[team].copy()))
        self.last_date = day
        return deltas

    def rate_game(self, game: GameRecord) -> np.ndarray:
        return self.rate_date([game])[0]

    def rate_games(self, games: Iterable[GameRecord]) -> "RatingBook":
        for _, group in _group_by_date(games):
            self.rate_date(group)
        return self
