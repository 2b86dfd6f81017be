"""Predictive distributions from per-line ratings.

A :class:`SurvivalCurve` stores, for every lattice line ``n``, the probability
that the home-perspective outcome exceeds ``n`` with a push at ``n`` counted
half.  That is exactly what the ratings are trained to predict, and it equals
the survival function of the integer outcome smeared uniformly over
``(s - 1/2, s + 1/2)``.  Between lattice lines the curve is interpolated
linearly, so the continuous picture and the pmf helpers below agree exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date
from typing import Mapping, Sequence

import numpy as np

from .ratings import MarginLattice, Mode, RatingBook, UnknownTeamError, win_probability


@dataclass
class SurvivalCurve:
    lattice: MarginLattice
    probs: np.ndarray
    home: str | None = None
    away: str | None = None
    date: date | None = None
    mode: Mode | None = None
    neutral: bool = False
    hfa: float = 0.0

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.shape != (len(self.lattice),):
            raise ValueError("need one probability per lattice line")

    @property
    def lines(self) -> np.ndarray:
        return self.lattice.values

    def at(self, x):
        """Survival at arbitrary points, linear between lines, flat beyond the ends."""
        return np.interp(x, self.lines, self.probs)

    def is_monotone(self, atol: float = 1e-12) -> bool:
        return bool(np.all(np.diff(self.probs) <= atol))


@dataclass
class Pmf:
    support: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        self.support = np.asarray(self.support, dtype=float)
        self.masses = np.asarray(self.masses, dtype=float)
        if self.support.shape != self.masses.shape:
            raise ValueError("support and masses differ in length")
        if np.any(self.masses < -1e-12):
            raise ValueError("masses must be nonnegative")
        if abs(self.masses.sum() - 1) > 1e-9:
            raise ValueError(f"masses sum to {self.masses.sum()}, not 1")

    @classmethod
    def from_dict(cls, masses: Mapping[float, float]) -> "Pmf":
        items = sorted(masses.items())
        return cls([k for k, _ in items], [v for _, v in items])


def monotone_project(raw: Sequence[float]) -> np.ndarray:
    """Closest nonincreasing sequence in least squares (pool adjacent violators)."""
    y = np.clip(np.asarray(raw, dtype=float), 0.0, 1.0)
    if y.size < 2 or np.all(np.diff(y) <= 0):
        return y
    # blocks of (sum, count); merge while an earlier block mean falls below a later one
    sums: list[float] = []
    counts: list[int] = []
    for v in y.tolist():
        sums.append(v)
        counts.append(1)
        while len(sums) > 1 and sums[-2] * counts[-1] < sums[-1] * counts[-2]:
            s, c = sums.pop(), counts.pop()
            sums[-1] += s
            counts[-1] += c
    out = np.repeat([s / c for s, c in zip(sums, counts)], counts)
    return np.clip(out, 0.0, 1.0)


def predict_survival(book: RatingBook, home: str, away: str, date: date | None = None,
                     neutral: bool = False, allow_new: bool = False) -> SurvivalCurve:
    """Survival curve for ``home`` hosting ``away``.

    With ``allow_new`` a team missing from the book is priced at the book's
    initial ratings, as it would be on its first game.
    """
    def team_ratings(team):
        if team in book.current:
            return book.current[team]
        if allow_new:
            return book.initial
        raise UnknownTeamError(team, book.current)

    gap = team_ratings(home) - team_ratings(away)[::-1]
    hfa = 0.0 if neutral else book.params.r_hfa
    raw = win_probability(gap + hfa, book.params.sigma)
    return SurvivalCurve(book.lattice, monotone_project(raw), home, away, date,
                         book.mode, neutral, hfa)


def _cell_points(lines: np.ndarray) -> np.ndarray:
    """Cell centres: half a step below the first line, midpoints, half a step above the last."""
    if lines.size == 1:
        return np.array([lines[0] - 0.5, lines[0] + 0.5])
    lo = lines[0] - 0.5 * (lines[1] - lines[0])
    hi = lines[-1] + 0.5 * (lines[-1] - lines[-2])
    return np.concatenate([[lo], 0.5 * (lines[1:] + lines[:-1]), [hi]])


def pmf_from_survival(curve: SurvivalCurve) -> Pmf:
    """Difference a monotone curve into one mass per lattice cell.

    Mass below the first line and above the last goes to the two outer cells.
    """
    if not curve.is_monotone(atol=1e-12):
        raise ValueError("survival curve must be nonincreasing")
    p = np.clip(curve.probs, 0.0, 1.0)
    masses = np.concatenate([[1.0 - p[0]], p[:-1] - p[1:], [p[-1]]])
    masses = np.clip(masses, 0.0, None)
    return Pmf(_cell_points(curve.lines), masses / masses.sum())


def survival_from_pmf(pmf: Pmf, lattice: MarginLattice, tie_credit: float = 0.5,
                      **meta) -> SurvivalCurve:
    """P(X > n) + tie_credit * P(X = n) at every lattice line."""
    lines = lattice.values[:, None]
    above = np.where(pmf.support[None, :] > lines, 1.0,
                     np.where(np.isclose(pmf.support[None, :], lines, rtol=0, atol=1e-12),
                              tie_credit, 0.0))
    return SurvivalCurve(lattice, above @ pmf.masses, **meta)


def integer_pmf(curve: SurvivalCurve) -> Pmf:
    """Pmf on the lattice lines: cell masses rounded to the nearest line.

    Each cell of :func:`pmf_from_survival` sits halfway between two lines and
    is split evenly between them; the two outer cells go to the end lines.
    Mass at line i is ``(G[i-1] - G[i+1]) / 2`` in the interior.
    """
    p = np.clip(curve.probs, 0.0, 1.0)
    if p.size == 1:
        return Pmf(curve.lines, [1.0])
    mid = 0.5 * (p[1:] + p[:-1])
    masses = np.concatenate([[1.0 - mid[0]], mid[:-1] - mid[1:], [mid[-1]]])
    masses = np.clip(masses, 0.0, None)
    return Pmf(curve.lines, masses / masses.sum())


def median(curve: SurvivalCurve) -> float:
    """Line whose probability is closest to one half.

    Two equally close lines straddling 0.5 are resolved by linear
    interpolation; a flat run exactly at 0.5 returns its midpoint.
    """
    p, x = curve.probs, curve.lines
    dist = np.abs(p - 0.5)
    best = np.flatnonzero(dist <= dist.min() + 1e-12)
    if best.size == 1:
        return float(x[best[0]])
    above = best[p[best] > 0.5]
    below = best[p[best] < 0.5]
    if above.size and below.size:
        i, j = above.max(), below.min()
        return float(x[i] + (p[i] - 0.5) * (x[j] - x[i]) / (p[i] - p[j]))
    return float(0.5 * (x[best[0]] + x[best[-1]]))


def mean(pmf: Pmf) -> float:
    return float(np.dot(pmf.support, pmf.masses))


def mean_from_survival(curve: SurvivalCurve) -> float:
    """Mean by summation by parts, ``x0 + sum_k (x[k+1] - x[k]) * G[k]``.

    ``x`` are the cell centres used by :func:`pmf_from_survival`; the sum runs
    over survival values only, no pmf is formed.
    """
    x = _cell_points(curve.lines)
    return float(x[0] + np.dot(np.diff(x), np.clip(curve.probs, 0.0, 1.0)))


def quantile(curve: SurvivalCurve, q: float) -> float:
    if not 0 < q < 1:
        raise ValueError(f"quantile level must be in (0, 1), got {q}")
    # survival is nonincreasing; interp needs increasing abscissae
    return float(np.interp(1.0 - q, curve.probs[::-1], curve.lines[::-1]))


def interval_probability(curve: SurvivalCurve, lo: float, hi: float) -> float:
    """Probability that the outcome falls in ``(lo, hi]``."""
    if not lo < hi:
        raise ValueError(f"need lo < hi, got {lo}, {hi}")
    return float(curve.at(lo) - curve.at(hi))


def orthogonal_points(spread_mean: float, total_mean: float) -> tuple[float, float]:
    """(points scored, points allowed) from mean spread and mean total."""
    return 0.5 * (total_mean + spread_mean), 0.5 * (total_mean - spread_mean)


@dataclass
class Summary:
    median: float
    mean: float
    quantiles: dict[float, float] = field(default_factory=dict)


SUMMARY_LEVELS = (0.05, 0.25, 0.75, 0.95)


def summarize(curve: SurvivalCurve, levels: Sequence[float] = SUMMARY_LEVELS) -> Summary:
    return Summary(median(curve), mean_from_survival(curve),
                   {q: quantile(curve, q) for q in levels})
