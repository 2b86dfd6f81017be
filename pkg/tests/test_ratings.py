import math
from datetime import date

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_games
from marginelo.ratings import (
    GameRecord,
    HyperParams,
    MarginLattice,
    Mode,
    OrderingError,
    RatingBook,
    UnknownTeamError,
    UnplayedGameError,
    comparison_value,
    observed_outcome,
    update_pair,
    win_probability,
)

D = date(2010, 9, 12)


def small_book(mode=Mode.SPREAD, half_width=10, **params):
    lattice = MarginLattice.symmetric(0.0, half_width)
    return RatingBook.flat(mode, lattice, HyperParams(**params))


class TestGameRecord:
    def test_played(self):
        assert GameRecord(D, 2010, "A", "B", 3, 0).played
        assert not GameRecord(D, 2010, "A", "B").played

    @pytest.mark.parametrize("hp,ap", [(-1, 3), (3, None), (2.5, 1)])
    def test_bad_scores(self, hp, ap):
        with pytest.raises(ValueError):
            GameRecord(D, 2010, "A", "B", hp, ap)

    def test_self_play(self):
        with pytest.raises(ValueError):
            GameRecord(D, 2010, "A", "A", 1, 2)


class TestComparisonValue:
    def test_spread_and_total(self):
        g = GameRecord(D, 2010, "A", "B", 24, 10)
        assert comparison_value(g, Mode.SPREAD) == 14
        assert comparison_value(g, Mode.TOTAL) == 34

    def test_unplayed(self):
        with pytest.raises(UnplayedGameError):
            comparison_value(GameRecord(D, 2010, "A", "B"), Mode.SPREAD)


class TestWinProbability:
    def test_even(self):
        assert win_probability(0.0) == 0.5

    @given(st.floats(-3000, 3000), st.floats(1, 1000))
    def test_complement(self, diff, sigma):
        assert win_probability(diff, sigma) + win_probability(-diff, sigma) == pytest.approx(1, abs=1e-14)

    @given(st.floats(-2000, 2000))
    def test_matches_math_erf(self, diff):
        expected = 0.5 * math.erfc(-diff / (300 * math.sqrt(2)))
        assert win_probability(diff, 300) == pytest.approx(expected, abs=1e-15)

    def test_sigma_positive(self):
        with pytest.raises(ValueError):
            win_probability(1.0, 0.0)


class TestObservedOutcome:
    def test_cover_push_miss(self):
        np.testing.assert_array_equal(observed_outcome(3, [2, 3, 4]), [1, 0.5, 0])

    def test_tie_credit(self):
        assert observed_outcome(3, 3, tie_credit=0.0) == 0.0


class TestHyperParams:
    def test_mode_defaults(self):
        s, t = HyperParams.default(Mode.SPREAD), HyperParams.default(Mode.TOTAL)
        assert (s.r_hfa, s.regress_fraction) == (54.0, 0.6)
        assert (t.r_hfa, t.regress_fraction) == (0.0, 0.7)
        assert s.sigma == t.sigma == 300.0

    @pytest.mark.parametrize("kw", [dict(kappa=0), dict(sigma=-1), dict(r_hfa=-5),
                                    dict(regress_fraction=1.5), dict(tie_credit=2)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            HyperParams(**kw)


class TestUpdatePair:
    def test_even_win(self):
        p = HyperParams(kappa=10)
        a, b = update_pair(1500.0, 1500.0, 1.0, p)
        assert (a, b) == (1505.0, 1495.0)

    def test_home_flag_shrinks_gain(self):
        p = HyperParams(kappa=10, r_hfa=54)
        plain, _ = update_pair(1500.0, 1500.0, 1.0, p)
        home, _ = update_pair(1500.0, 1500.0, 1.0, p, home_flag=True)
        assert home < plain

    @given(st.floats(1000, 2000), st.floats(1000, 2000), st.sampled_from([0, 0.5, 1]))
    def test_conserves(self, ra, rb, obs):
        a, b = update_pair(ra, rb, obs, HyperParams(kappa=20))
        assert (a - ra) + (b - rb) == pytest.approx(0, abs=1e-12)


class TestMarginLattice:
    def test_symmetric(self):
        lat = MarginLattice.symmetric(42.0, 3, 1.0)
        assert lat.lines == (39.0, 40.0, 41.0, 42.0, 43.0, 44.0, 45.0)
        assert lat.mirror(40.0) == 44.0
        assert lat.mirror_index(0) == 6
        np.testing.assert_array_equal(lat.offsets, [-3, -2, -1, 0, 1, 2, 3])

    @pytest.mark.parametrize("lines", [(), (1.0, 0.0, -1.0), (-1.0, 0.0, 2.0), (-1.0, 1.0)])
    def test_invalid(self, lines):
        with pytest.raises(ValueError):
            MarginLattice(lines)

    def test_missing_line(self):
        with pytest.raises(IndexError):
            MarginLattice.symmetric(0, 2).index(0.5)

    def test_values_read_only(self):
        with pytest.raises(ValueError):
            MarginLattice.symmetric(0, 2).values[0] = 9


class TestRatingBook:
    def test_home_win_raises_upper_lines(self):
        book = small_book(kappa=10)
        book.rate_game(GameRecord(D, 2010, "A", "B", 21, 14))
        a, b = book.ratings("A"), book.ratings("B")
        lat = book.lattice
        assert a[lat.index(6)] > 1500 and a[lat.index(7)] == 1500 and a[lat.index(8)] < 1500
        np.testing.assert_allclose(a - 1500, -(b[::-1] - 1500), atol=1e-12)

    def test_per_line_conservation(self):
        book = small_book(kappa=25, r_hfa=30)
        for g in random_games(300, seed=3):
            before_h = book.ensure(g.home).copy()
            before_a = book.ensure(g.away).copy()
            book.rate_game(g)
            dh = book.current[g.home] - before_h
            da = book.current[g.away] - before_a
            np.testing.assert_allclose(dh + da[::-1], 0, atol=1e-12)

    def test_same_date_simultaneous(self):
        games = [GameRecord(D, 2010, "A", "B", 10, 3), GameRecord(D, 2010, "A", "C", 0, 7)]
        one, two = small_book(kappa=10), small_book(kappa=10)
        one.rate_date(games)
        two.rate_date(games[::-1])
        for t in "ABC":
            np.testing.assert_array_equal(one.ratings(t), two.ratings(t))
        # second game was priced from pre-date ratings: C's gain is that of a fresh pair
        fresh = small_book(kappa=10)
        fresh.rate_game(games[1])
        np.testing.assert_array_equal(one.ratings("C"), fresh.ratings("C"))

    def test_history_once_per_date(self):
        book = small_book()
        book.rate_date([GameRecord(D, 2010, "A", "B", 10, 3), GameRecord(D, 2010, "A", "C", 1, 2)])
        assert len(book.history["A"]) == 1
        assert book.history["A"][0][0] == D

    def test_out_of_order(self):
        book = small_book()
        book.rate_game(GameRecord(D, 2010, "A", "B", 1, 0))
        book.rate_game(GameRecord(D, 2010, "C", "D", 1, 0))
        with pytest.raises(OrderingError):
            book.rate_game(GameRecord(date(2010, 9, 1), 2010, "A", "B", 1, 0))

    def test_season_going_backwards(self):
        book = small_book()
        book.rate_game(GameRecord(D, 2011, "A", "B", 1, 0))
        with pytest.raises(OrderingError):
            book.rate_game(GameRecord(date(2010, 10, 1), 2010, "A", "B", 1, 0))

    def test_unplayed_rejected(self):
        with pytest.raises(UnplayedGameError):
            small_book().rate_game(GameRecord(D, 2010, "A", "B"))

    def test_season_change_regresses(self):
        book = small_book(kappa=50, regress_fraction=0.6)
        book.rate_game(GameRecord(D, 2010, "A", "B", 30, 0))
        before = book.ratings("A").copy()
        book.rate_game(GameRecord(date(2011, 9, 1), 2011, "C", "D", 3, 3))
        np.testing.assert_allclose(book.ratings("A") - 1500, 0.6 * (before - 1500), atol=1e-12)

    def test_unknown_team_lists_known(self):
        book = small_book()
        book.rate_game(GameRecord(D, 2010, "A", "B", 1, 0))
        with pytest.raises(UnknownTeamError) as err:
            book.ratings("Z")
        assert "A, B" in str(err.value)

    def test_rate_games_matches_date_loop(self):
        games = random_games(200, per_date=4, seed=9)
        one = small_book(kappa=15).rate_games(games)
        two = small_book(kappa=15)
        for k in range(0, len(games), 4):
            two.rate_date(games[k:k + 4])
        for t in one.teams:
            np.testing.assert_array_equal(one.ratings(t), two.ratings(t))

    def test_total_mode_high_scoring_game(self):
        lattice = MarginLattice.symmetric(40.0, 10)
        book = RatingBook.flat(Mode.TOTAL, lattice, HyperParams(kappa=10))
        book.rate_game(GameRecord(D, 2010, "A", "B", 35, 30))
        a = book.ratings("A")
        assert np.all(a > 1500)  # every total line was exceeded
        assert book.expected_outcome("A", "B", 45.0, neutral=True) > 0.5
