"""Game files, rating-book snapshots and table exports.

Game files are CSV with the exact header::

    date,season,home,away,home_points,away_points,neutral

Scores may be blank only for scheduled games.  Snapshots are JSON documents
carrying ``schema_version``; floats are written with ``repr`` so every rating
survives a round trip bit for bit.
"""

from __future__ import annotations

import csv
import json
from datetime import date
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .ratings import GameRecord, HyperParams, MarginLattice, Mode, RatingBook

GAME_HEADER = ["date", "season", "home", "away", "home_points", "away_points", "neutral"]
ALIAS_HEADER = ["old_name", "canonical_name"]
SCHEMA_VERSION = 1


class GameFileError(ValueError):
    def __init__(self, path, line: int | None, message: str):
        self.path, self.line = str(path), line
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")


class SchemaError(ValueError):
    """Snapshot document is corrupt or from an incompatible version."""


def load_aliases(path) -> dict[str, str]:
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if not rows or [c.strip() for c in rows[0]] != ALIAS_HEADER:
        raise GameFileError(path, 1, f"alias header must be {','.join(ALIAS_HEADER)}")
    aliases = {}
    for n, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2 or not row[0].strip() or not row[1].strip():
            raise GameFileError(path, n, "alias rows need two nonempty names")
        aliases[row[0].strip()] = row[1].strip()
    return aliases


def _parse_points(raw: str, path, n: int, column: str):
    raw = raw.strip()
    if raw == "":
        return None
    try:
        value = int(raw)
    except ValueError:
        raise GameFileError(path, n, f"{column} must be an integer, got {raw!r}") from None
    if value < 0:
        raise GameFileError(path, n, f"{column} must be nonnegative, got {value}")
    return value


def _parse_row(row: Sequence[str], path, n: int, aliases: Mapping[str, str]) -> GameRecord:
    if len(row) != len(GAME_HEADER):
        raise GameFileError(path, n, f"expected {len(GAME_HEADER)} fields, got {len(row)}")
    raw_date, raw_season, home, away, hp, ap, neutral = (c.strip() for c in row)
    try:
        day = date.fromisoformat(raw_date)
    except ValueError:
        raise GameFileError(path, n, f"bad ISO date {raw_date!r}") from None
    try:
        season = int(raw_season)
    except ValueError:
        raise GameFileError(path, n, f"season must be an integer, got {raw_season!r}") from None
    if not home or not away:
        raise GameFileError(path, n, "team names must be nonempty")
    if neutral not in ("0", "1"):
        raise GameFileError(path, n, f"neutral must be 0 or 1, got {neutral!r}")
    hp = _parse_points(hp, path, n, "home_points")
    ap = _parse_points(ap, path, n, "away_points")
    if (hp is None) != (ap is None):
        raise GameFileError(path, n, "scores must be both present or both blank")
    try:
        return GameRecord(day, season, aliases.get(home, home), aliases.get(away, away),
                          hp, ap, neutral == "1")
    except ValueError as exc:
        raise GameFileError(path, n, str(exc)) from None


def load_games(path, aliases: Mapping[str, str] | None = None) -> list[GameRecord]:
    """Parse a game file; records come back date-sorted, stable within a date."""
    aliases = aliases or {}
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != GAME_HEADER:
            raise GameFileError(path, 1, f"header must be {','.join(GAME_HEADER)}")
        games = [_parse_row(row, path, n, aliases)
                 for n, row in enumerate(reader, start=2) if row]
    return sorted(games, key=lambda g: g.date)


def save_games(games: Iterable[GameRecord], path) -> None:
    def pts(x):
        return "" if x is None else str(x)

    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(GAME_HEADER)
        for g in games:
            w.writerow([g.date.isoformat(), g.season, g.home, g.away, pts(g.home_points),
                        pts(g.away_points), int(g.neutral_site)])


# -- rating books ------------------------------------------------------------

def _floats(a) -> list[float]:
    return [float(x) for x in np.asarray(a, dtype=float)]


def book_to_dict(book: RatingBook, include_history: bool = True) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "mode": book.mode.value,
        "lattice": {"lines": list(book.lattice.lines), "center": book.lattice.center},
        "hyperparams": {k: float(v) for k, v in vars(book.params).items()},
        "initial": _floats(book.initial),
        "last_date": book.last_date.isoformat() if book.last_date else None,
        "last_season": book.last_season,
        "current": {team: _floats(r) for team, r in sorted(book.current.items())},
    }
    if include_history and book.track_history:
        doc["history"] = {team: [[d.isoformat(), _floats(r)] for d, r in entries]
                          for team, entries in sorted(book.history.items())}
    return doc


def book_from_dict(doc: Mapping) -> RatingBook:
    if not isinstance(doc, Mapping) or "schema_version" not in doc:
        raise SchemaError("snapshot lacks a schema_version field")
    version = doc["schema_version"]
    if version != SCHEMA_VERSION:
        raise SchemaError(f"snapshot schema version {version!r} is not supported "
                          f"(this build reads version {SCHEMA_VERSION})")
    try:
        lattice = MarginLattice(tuple(doc["lattice"]["lines"]), float(doc["lattice"]["center"]))
        params = HyperParams(**doc["hyperparams"])
        history = doc.get("history")
        book = RatingBook(Mode(doc["mode"]), lattice, params, np.array(doc["initial"], float),
                          track_history=history is not None)
        for team, r in doc["current"].items():
            r = np.array(r, dtype=float)
            if r.shape != (len(lattice),):
                raise SchemaError(f"team {team!r} has {r.size} ratings for "
                                  f"{len(lattice)} lattice lines")
            book.current[team] = r
        if history is not None:
            book.history = {team: [(date.fromisoformat(d), np.array(r, dtype=float))
                                   for d, r in entries] for team, entries in history.items()}
        book.last_date = date.fromisoformat(doc["last_date"]) if doc["last_date"] else None
        book.last_season = doc["last_season"]
    except SchemaError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"corrupt snapshot: {exc}") from None
    return book


def save_book(book: RatingBook, path, include_history: bool = True) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(book_to_dict(book, include_history), f, separators=(",", ":"))
        f.write("\n")


def load_book(path) -> RatingBook:
    try:
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not a JSON document ({exc})") from None
    return book_from_dict(doc)


def books_equal(a: RatingBook, b: RatingBook) -> bool:
    """Bitwise equality of everything a snapshot stores."""
    return book_to_dict(a) == book_to_dict(b)


# -- tables ------------------------------------------------------------------

def _cell(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, date):
        return x.isoformat()
    return str(x)


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(x) for x in row])


def rating_trajectory_header(book: RatingBook) -> list[str]:
    return ["date", "team", *(f"line_{x:g}" for x in book.lattice.lines)]


def rating_trajectory_rows(book: RatingBook):
    """One (date, team, rating per line...) row per team per rated date."""
    for team in sorted(book.history):
        for day, r in book.history[team]:
            yield (day, team, *(float(x) for x in r))
