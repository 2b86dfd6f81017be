"""Command-line front end: ``marginelo {rate,predict,simulate,backtest,tune}``.

Exit codes: 0 success, 1 usage or config error, 2 data error, 3 failed --check.
"""

from __future__ import annotations

import argparse
import configparser
import io
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from . import backtest as bt
from .calibration import default_lattice, initial_book, rank_candidates
from .distribution import mean_from_survival, predict_survival, summarize
from .distribution import orthogonal_points
from .league import (
    TOY_LAMBDAS,
    TOY_PARAMS,
    generate_synthetic_season,
    run_toy_league,
    synthetic_benchmark,
)
from .ratings import HyperParams, Mode, OrderingError, UnknownTeamError, UnplayedGameError
from .storage import (
    GameFileError,
    SchemaError,
    load_aliases,
    load_book,
    load_games,
    rating_trajectory_header,
    rating_trajectory_rows,
    save_book,
    save_games,
    write_table,
)

log = logging.getLogger("marginelo")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CHECK = 0, 1, 2, 3
PARAM_KEYS = [f.name for f in fields(HyperParams)]
TOY_TOLERANCE = 0.02
BAND_PASS_RATE = 0.9


class ConfigError(ValueError):
    pass


class UsageError(Exception):
    pass


@dataclass
class Config:
    spread: HyperParams = field(default_factory=lambda: HyperParams.default(Mode.SPREAD))
    total: HyperParams = field(default_factory=lambda: HyperParams.default(Mode.TOTAL))
    half_width: int = 50
    step: float = 1.0
    seed: int = 0
    burn_in: int = 1
    aliases: str = ""

    def params(self, mode: Mode) -> HyperParams:
        return self.spread if Mode(mode) is Mode.SPREAD else self.total

    @classmethod
    def load(cls, path: str | None) -> "Config":
        cfg = cls()
        if path is None:
            return cfg
        parser = configparser.ConfigParser()
        try:
            with open(path, encoding="utf-8") as f:
                parser.read_file(f)
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        for mode in Mode:
            if not parser.has_section(mode.value):
                continue
            section = parser[mode.value]
            for key in section:
                if key not in PARAM_KEYS:
                    raise ConfigError(f"unknown key [{mode.value}] {key}")
            values = {}
            for key in PARAM_KEYS:
                if key not in section:
                    raise ConfigError(f"missing config key [{mode.value}] {key}")
                values[key] = _number(section, key, float)
            try:
                setattr(cfg, mode.value, HyperParams(**values))
            except ValueError as exc:
                raise ConfigError(f"[{mode.value}] {exc}") from None
        if parser.has_section("lattice"):
            sec = parser["lattice"]
            for key in ("half_width", "step"):
                if key not in sec:
                    raise ConfigError(f"missing config key [lattice] {key}")
            cfg.half_width = _number(sec, "half_width", int)
            cfg.step = _number(sec, "step", float)
        if parser.has_section("run"):
            sec = parser["run"]
            cfg.seed = _number(sec, "seed", int) if "seed" in sec else cfg.seed
            cfg.burn_in = _number(sec, "burn_in", int) if "burn_in" in sec else cfg.burn_in
            cfg.aliases = sec.get("aliases", cfg.aliases)
        return cfg

    def dumps(self) -> str:
        parser = configparser.ConfigParser()
        for mode in Mode:
            parser[mode.value] = {k: repr(v) for k, v in asdict(self.params(mode)).items()}
        parser["lattice"] = {"half_width": str(self.half_width), "step": repr(self.step)}
        parser["run"] = {"seed": str(self.seed), "burn_in": str(self.burn_in),
                         "aliases": self.aliases}
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()


def _number(section, key, kind):
    raw = section[key]
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"[{section.name}] {key} = {raw!r} is not a valid {kind.__name__}") from None


def _modes(arg: str) -> list[Mode]:
    return list(Mode) if arg == "both" else [Mode(arg)]


def _games(path, cfg: Config):
    aliases = load_aliases(cfg.aliases) if cfg.aliases else None
    return load_games(path, aliases)


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands ----------------------------------------------------------------

def cmd_rate(args, cfg: Config) -> int:
    games = [g for g in _games(args.games, cfg) if g.played]
    if not games:
        raise GameFileError(args.games, None, "no completed games to rate")
    seasons = sorted({g.season for g in games})[:max(cfg.burn_in, 1)]
    pool = [g for g in games if g.season in seasons]
    out = _out_dir(args.out)
    for mode in _modes(args.mode):
        lattice = default_lattice(mode, pool, cfg.half_width, cfg.step)
        book = initial_book(pool, mode, cfg.params(mode), lattice)
        book.rate_games(games)
        save_book(book, out / f"book_{mode.value}.json", include_history=not args.no_history)
        write_table(out / f"ratings_{mode.value}.csv", rating_trajectory_header(book),
                    rating_trajectory_rows(book))
        log.info("rated %d games (%s), %d teams", len(games), mode.value, len(book.current))
    (out / "config.ini").write_text(cfg.dumps(), encoding="utf-8")
    return EXIT_OK


def _curve_report(curve) -> dict:
    s = summarize(curve)
    report = {"median": s.median, "mean": s.mean}
    report.update({f"q{round(100 * q):02d}": v for q, v in s.quantiles.items()})
    report["lines"] = curve.lines.tolist()
    report["survival"] = curve.probs.tolist()
    return report


def _load_books(directory, modes):
    books = {}
    for mode in modes:
        path = Path(directory) / f"book_{mode.value}.json"
        books[mode] = load_book(path)
    return books


def cmd_predict(args, cfg: Config) -> int:
    modes = _modes(args.mode)
    books = _load_books(args.books, modes)
    if args.vs_average:
        if set(modes) != set(Mode):
            raise UsageError("--vs-average needs both spread and total books (--mode both)")
        rows = []
        teams = sorted(set(books[Mode.SPREAD].current) & set(books[Mode.TOTAL].current))
        for team in teams:
            means = {}
            for mode, book in books.items():
                probe = book.copy()
                probe.current["__average__"] = probe.initial.copy()
                means[mode] = mean_from_survival(
                    predict_survival(probe, team, "__average__", neutral=True))
            scored, allowed = orthogonal_points(means[Mode.SPREAD], means[Mode.TOTAL])
            rows.append({"team": team, "points_scored": scored, "points_allowed": allowed,
                         "spread_mean": means[Mode.SPREAD], "total_mean": means[Mode.TOTAL]})
        _emit(args, rows, ["team", "points_scored", "points_allowed", "spread_mean",
                           "total_mean"])
        return EXIT_OK
    if not (args.home and args.away):
        raise UsageError("predict needs --home and --away (or --vs-average)")
    day = date.fromisoformat(args.date) if args.date else None
    report = {"home": args.home, "away": args.away,
              "date": day.isoformat() if day else None, "neutral": args.neutral}
    for mode, book in books.items():
        curve = predict_survival(book, args.home, args.away, day, args.neutral)
        report[mode.value] = _curve_report(curve)
    if set(modes) == set(Mode):
        scored, allowed = orthogonal_points(report["spread"]["mean"], report["total"]["mean"])
        report["points"] = {"home": scored, "away": allowed}
    if args.format == "csv":
        rows = []
        for mode in modes:
            r = report[mode.value]
            rows.append({"mode": mode.value, "home": args.home, "away": args.away,
                         **{k: r[k] for k in ("median", "mean", "q05", "q25", "q75", "q95")}})
        _emit(args, rows, ["mode", "home", "away", "median", "mean", "q05", "q25", "q75", "q95"])
    else:
        _emit(args, report)
    return EXIT_OK


def _emit(args, payload, columns=None):
    if args.format == "json" or columns is None:
        text = json.dumps(payload, indent=1) + "\n"
    else:
        buf = io.StringIO()
        buf.write(",".join(columns) + "\n")
        for row in payload:
            buf.write(",".join(repr(row[c]) if isinstance(row[c], float) else str(row[c])
                               for c in columns) + "\n")
        text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_simulate(args, cfg: Config) -> int:
    out = _out_dir(args.out)
    seed = cfg.seed if args.seed is None else args.seed
    if args.paper_toy:
        params = TOY_PARAMS.replace(kappa=args.kappa) if args.kappa else TOY_PARAMS
        result = run_toy_league(TOY_LAMBDAS, args.n_games, params, seed, args.record_every)
        write_table(out / "trajectories.csv", ["game", "team", "predicted", "oracle"],
                    result.trajectory_rows())
        if args.export_games:
            save_games(result.games(), out / "games.csv")
        err = result.max_error()
        print(f"toy league: {args.n_games} games, max |tail-averaged rate - exact| = {err:.4f}"
              f" (tolerance {TOY_TOLERANCE})")
        if args.check and not err <= TOY_TOLERANCE:
            return EXIT_CHECK
        return EXIT_OK
    if args.schedule:
        if not args.books:
            raise UsageError("--schedule needs --books")
        books = _load_books(args.books, list(Mode))
        schedule = _games(args.schedule, cfg)
        games = generate_synthetic_season(books[Mode.SPREAD], books[Mode.TOTAL], schedule, seed)
        save_games(games, out / "synthetic.csv")
        print(f"scored {len(games)} scheduled games from model predictions")
        return EXIT_OK
    bench = synthetic_benchmark(seed=seed, synthetic_seasons=args.seasons)
    save_games(bench.train_games, out / "train.csv")
    save_games(bench.synthetic_games, out / "synthetic.csv")
    save_book(bench.spread_book, out / "book_spread.json")
    save_book(bench.total_book, out / "book_total.json")
    print(f"benchmark league: {len(bench.train_games)} training games, "
          f"{len(bench.synthetic_games)} synthetic games")
    return EXIT_OK


def cmd_backtest(args, cfg: Config) -> int:
    games = _games(args.games, cfg)
    out = _out_dir(args.out)
    books = _load_books(args.books, _modes(args.mode)) if args.books else {}
    seed = cfg.seed if args.seed is None else args.seed
    passed = True
    for mode in _modes(args.mode):
        lattice = None
        if mode not in books:
            pool_seasons = sorted({g.season for g in games if g.played})[:cfg.burn_in]
            pool = [g for g in games if g.played and g.season in pool_seasons]
            lattice = default_lattice(mode, pool, cfg.half_width, cfg.step)
        # a saved book keeps its own hyperparameters unless a config file overrides them
        params = cfg.params(mode) if args.config or mode not in books else None
        records = bt.walk_forward(games, params, mode, cfg.burn_in, books.get(mode), lattice)
        if not records:
            raise GameFileError(args.games, None, "no games left to score after burn-in")
        write_table(out / f"records_{mode.value}.csv",
                    ["date", "season", "home", "away", "observed", "median", "mean",
                     "q05", "q25", "q75", "q95", "percentile", "residual"],
                    _record_rows(records))
        write_table(out / f"mae_{mode.value}.csv", ["season", "games", "model_mae",
                                                    "baseline_mae"], bt.mae_by_season(records))
        model, base = bt.mean_absolute_error(records)
        line = f"{mode.value}: {len(records)} games, MAE model {model:.3f} baseline {base:.3f}"
        # MAE dominance is judged against the zero-spread baseline only; totals are reported
        ok = model < base if mode is Mode.SPREAD else True
        if len(records) >= 10:
            diag = bt.percentile_diagnostic(records, args.n_mc, seed)
            broken = bt.broken_model_control(records, seed, n_mc=args.n_mc, band_seed=seed)
            write_table(out / f"percentiles_{mode.value}.csv",
                        ["rank", "expected", "deviation", "lower", "upper", "broken_deviation"],
                        zip(range(1, diag.n + 1), diag.expected, diag.deviations, diag.lower,
                            diag.upper, broken.deviations))
            line += (f", band pass-rate {diag.inside_fraction:.3f}"
                     f" (broken model {broken.inside_fraction:.3f})")
            ok = ok and diag.inside_fraction >= BAND_PASS_RATE
        if mode is Mode.SPREAD:
            data = bt.home_field_ratio([r.game for r in records])
            model_h = bt.model_home_field_ratio(records, args.n_samples, seed)
            write_table(out / "home_field.csv",
                        ["spread", "data_ratio", "model_ratio", "data_count", "model_count"],
                        zip(data.centers, data.ratio, model_h.ratio, data.unbiased,
                            model_h.unbiased))
        print(line)
        passed = passed and ok
    if args.check and not passed:
        return EXIT_CHECK
    return EXIT_OK


def _record_rows(records):
    for r in records:
        s = summarize(r.prediction)
        q = s.quantiles
        yield (r.game.date, r.game.season, r.game.home, r.game.away, r.observed, r.median,
               r.mean, q[0.05], q[0.25], q[0.75], q[0.95], r.percentile, r.residual)


def _range(text):
    lo, _, hi = text.partition(",")
    return (float(lo), float(hi or lo))


def cmd_tune(args, cfg: Config) -> int:
    games = _games(args.games, cfg)
    seed = cfg.seed if args.seed is None else args.seed
    out = _out_dir(args.out)
    for mode in _modes(args.mode):
        space = {"kappa": _range(args.kappa_range),
                 "regress_fraction": _range(args.regress_range)}
        if mode is Mode.SPREAD:
            space["r_hfa"] = _range(args.hfa_range)
        pool_seasons = sorted({g.season for g in games if g.played})[:cfg.burn_in]
        pool = [g for g in games if g.played and g.season in pool_seasons]
        lattice = default_lattice(mode, pool, cfg.half_width, cfg.step)
        ranked = rank_candidates(games, space, mode, args.objective, args.folds,
                                 cfg.params(mode), args.n_candidates, "random", seed,
                                 cfg.burn_in, lattice)
        write_table(out / f"tune_{mode.value}.csv", ["rank", "score", *PARAM_KEYS],
                    ([c.rank, c.score, *asdict(c.params).values()] for c in ranked))
        setattr(cfg, mode.value, ranked[0].params)
        best = ranked[0]
        print(f"{mode.value}: best {args.objective} {best.score:.4f} with kappa "
              f"{best.params.kappa:.4g}, r_hfa {best.params.r_hfa:.4g}, "
              f"regress_fraction {best.params.regress_fraction:.4g}")
    (out / "tuned.ini").write_text(cfg.dumps(), encoding="utf-8")
    return EXIT_OK


# -- argument parsing --------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file with [spread], [total], "
                                         "[lattice] and [run] sections")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--mode", choices=["spread", "total", "both"], default="both")
    common.add_argument("--check", action="store_true",
                        help="exit 3 when the command's acceptance threshold fails")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="marginelo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("rate", parents=[common], help="rate a game file")
    p.add_argument("games")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--no-history", action="store_true")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("predict", parents=[common], help="predict a matchup from saved books")
    p.add_argument("books", help="directory holding book_spread.json / book_total.json")
    p.add_argument("--home")
    p.add_argument("--away")
    p.add_argument("--date")
    p.add_argument("--neutral", action="store_true")
    p.add_argument("--vs-average", action="store_true",
                   help="points scored/allowed of every team against a league-average side")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("simulate", parents=[common], help="synthetic leagues")
    p.add_argument("--out", required=True)
    p.add_argument("--paper-toy", action="store_true",
                   help="nine-team Poisson league with binary Elo")
    p.add_argument("--n-games", type=int, default=5_000_000)
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--record-every", type=int, default=1000)
    p.add_argument("--export-games", action="store_true")
    p.add_argument("--books", help="score --schedule from these books")
    p.add_argument("--schedule", help="game file with blank scores")
    p.add_argument("--seasons", type=int, default=5, help="synthetic seasons for the benchmark")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("backtest", parents=[common], help="walk-forward validation")
    p.add_argument("games")
    p.add_argument("--out", required=True)
    p.add_argument("--books", help="start from saved books instead of burn-in initialisation")
    p.add_argument("--n-mc", type=int, default=10_000)
    p.add_argument("--n-samples", type=int, default=20)
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("tune", parents=[common], help="random search over hyperparameters")
    p.add_argument("games")
    p.add_argument("--out", required=True)
    p.add_argument("--n-candidates", type=int, default=100)
    p.add_argument("--objective", choices=sorted(bt.OBJECTIVES), default="mae")
    p.add_argument("--folds", type=int, default=1)
    p.add_argument("--kappa-range", default="1,40")
    p.add_argument("--hfa-range", default="0,100")
    p.add_argument("--regress-range", default="0.3,1")
    p.set_defaults(func=cmd_tune)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        cfg = Config.load(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        log.info("resolved config:\n%s", cfg.dumps())
        return args.func(args, cfg)
    except (ConfigError, UsageError) as exc:
        print(f"marginelo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GameFileError, SchemaError, UnknownTeamError, OrderingError, UnplayedGameError,
            FileNotFoundError, IndexError, ValueError) as exc:
        print(f"marginelo: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
