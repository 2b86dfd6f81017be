"""Initial ratings, offseason regression and hyperparameter search."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.special import erfinv

from .distribution import monotone_project
from .ratings import (
    SQRT2,
    GameRecord,
    HyperParams,
    MarginLattice,
    Mode,
    RatingBook,
    comparison_value,
)


@dataclass
class MinBiasDistribution:
    """Outcome survival pooled over games with team identities ignored."""

    lattice: MarginLattice
    survival: np.ndarray
    n_games: int
    mode: Mode = Mode.SPREAD

    @property
    def epsilon(self) -> float:
        return 1.0 / (2 * self.n_games)


def _played(games):
    return [g for g in games if g.played]


def default_lattice(mode: Mode, games: Sequence[GameRecord] = (), half_width: int = 50,
                    step: float = 1.0) -> MarginLattice:
    """Integer lines around 0 for spreads, around the rounded mean total for totals."""
    if Mode(mode) is Mode.SPREAD:
        return MarginLattice.symmetric(0.0, half_width, step)
    played = _played(games)
    if not played:
        raise ValueError("a total lattice needs completed games to locate its center")
    center = round(float(np.mean([comparison_value(g, Mode.TOTAL) for g in played])))
    return MarginLattice.symmetric(float(center), half_width, step)


def min_bias_survival(games: Sequence[GameRecord], lattice: MarginLattice, mode: Mode,
                      tie_credit: float = 0.5) -> MinBiasDistribution:
    played = _played(games)
    if not played:
        raise ValueError("min-bias distribution needs at least one completed game")
    mode = Mode(mode)
    values = np.array([comparison_value(g, mode) for g in played])
    if mode is Mode.SPREAD:
        values = np.concatenate([values, -values])
    lines = lattice.values[:, None]
    # integer counts first so mirrored spread lines sum to exactly one pool
    above = (values[None, :] > lines).sum(axis=1)
    ties = (values[None, :] == lines).sum(axis=1)
    survival = (above + tie_credit * ties) / values.size
    return MinBiasDistribution(lattice, monotone_project(survival), len(played), mode)


def initial_ratings(minbias: MinBiasDistribution, params: HyperParams) -> np.ndarray:
    """Per-line starting ratings that reproduce the min-bias survival.

    The gap between a line and its mirror is set to the probit of the survival,
    split evenly about ``r0``.  For survival curves that are symmetric about the
    lattice center (always true for pooled spreads) the reproduction is exact;
    otherwise the mirrored pair reproduces the symmetrised curve.  Survival
    values of 0 or 1 are clamped to ``[eps, 1 - eps]`` with ``eps = 1/(2N)``.
    """
    eps = minbias.epsilon
    p = np.clip(minbias.survival, eps, 1 - eps)
    probit = SQRT2 * params.sigma * erfinv(2 * p - 1)
    return params.r0 + 0.25 * (probit - probit[::-1])


def clamped_lines(minbias: MinBiasDistribution) -> np.ndarray:
    """Mask of lines whose survival (or its mirror's) needed clamping."""
    eps = minbias.epsilon
    s = minbias.survival
    bad = (s < eps) | (s > 1 - eps)
    return bad | bad[::-1]


def initial_book(pool: Sequence[GameRecord], mode: Mode, params: HyperParams | None = None,
                 lattice: MarginLattice | None = None, **book_kw) -> RatingBook:
    """Empty book whose new teams start at the min-bias ratings of ``pool``."""
    mode = Mode(mode)
    params = params or HyperParams.default(mode)
    lattice = lattice or default_lattice(mode, pool)
    minbias = min_bias_survival(pool, lattice, mode, params.tie_credit)
    return RatingBook(mode, lattice, params, initial_ratings(minbias, params), **book_kw)


def regress_to_mean(book: RatingBook, initial: np.ndarray | None = None,
                    fraction: float | None = None) -> RatingBook:
    """Copy of ``book`` with every deviation from ``initial`` scaled by ``fraction``."""
    fraction = book.params.regress_fraction if fraction is None else fraction
    if not 0 <= fraction <= 1:
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    anchor = book.initial if initial is None else np.asarray(initial, dtype=float)
    out = book.copy()
    for team, r in out.current.items():
        out.current[team] = anchor + fraction * (r - anchor)
    return out


# -- hyperparameter search ---------------------------------------------------

TUNABLE = ("kappa", "r_hfa", "regress_fraction")


def _candidates(search_space: Mapping[str, object], base: HyperParams,
                n_candidates: int, method: str, seed: int) -> list[HyperParams]:
    if not search_space:
        raise ValueError("search space is empty")
    for name in search_space:
        if name not in TUNABLE:
            raise ValueError(f"cannot tune {name!r}; tunable parameters are {TUNABLE}")
    names = list(search_space)
    if method == "grid":
        axes = []
        for name in names:
            axis = search_space[name]
            if isinstance(axis, tuple):
                raise ValueError(f"grid search needs explicit values for {name!r}")
            axes.append(list(axis))
        combos = list(itertools.product(*axes))
    elif method == "random":
        rng = np.random.default_rng(seed)
        combos = []
        for _ in range(n_candidates):
            combo = []
            for name in names:
                axis = search_space[name]
                if isinstance(axis, tuple):
                    lo, hi = axis
                    combo.append(float(rng.uniform(lo, hi)) if hi > lo else float(lo))
                else:
                    axis = list(axis)
                    combo.append(axis[int(rng.integers(len(axis)))])
            combos.append(tuple(combo))
        # degenerate spaces collapse to one candidate per distinct value set
        combos = list(dict.fromkeys(combos))
    else:
        raise ValueError(f"unknown search method {method!r}")
    if not combos:
        raise ValueError("search space is empty")
    return [base.replace(**{n: float(v) for n, v in zip(names, c)}) for c in combos]


def _chunks(seq, folds):
    bounds = np.linspace(0, len(seq), folds + 1).round().astype(int)
    return [seq[a:b] for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def evaluate(games: Sequence[GameRecord], params: HyperParams, mode: Mode,
             objective: str | Callable = "mae", folds: int = 1, burn_in: int = 1,
             lattice: MarginLattice | None = None) -> float:
    """Walk-forward objective for one candidate, averaged over contiguous folds."""
    from .backtest import OBJECTIVES, walk_forward

    score = OBJECTIVES[objective] if isinstance(objective, str) else objective
    records = walk_forward(games, params, mode, burn_in=burn_in, lattice=lattice)
    if not records:
        raise ValueError("no games left to score after burn-in")
    return float(np.mean([score(chunk) for chunk in _chunks(records, folds)]))


@dataclass
class Candidate:
    rank: int
    params: HyperParams
    score: float


def rank_candidates(games, search_space, mode: Mode, objective="mae", folds: int = 1,
                    base: HyperParams | None = None, n_candidates: int = 100,
                    method: str = "random", seed: int = 0, burn_in: int = 1,
                    lattice: MarginLattice | None = None) -> list[Candidate]:
    """Score every candidate; ties keep generation order."""
    base = base or HyperParams.default(mode)
    cands = _candidates(search_space, base, n_candidates, method, seed)
    scores = [evaluate(games, c, mode, objective, folds, burn_in, lattice) for c in cands]
    order = sorted(range(len(cands)), key=lambda i: (math.inf if math.isnan(scores[i])
                                                     else scores[i], i))
    return [Candidate(r + 1, cands[i], scores[i]) for r, i in enumerate(order)]


def tune(games, search_space, objective="mae", folds: int = 1, *, mode: Mode = Mode.SPREAD,
         **kw) -> HyperParams:
    """Best candidate by walk-forward objective (first generated wins ties)."""
    return rank_candidates(games, search_space, mode, objective, folds, **kw)[0].params
