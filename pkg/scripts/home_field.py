"""Biased over unbiased spread histograms for data and model at several home offsets.

Writes one CSV per offset with the bin centre, counts, both ratios, their
standard errors and the z score of the difference.
"""
import argparse
import csv

import numpy as np

from marginelo.backtest import home_field_ratio, model_home_field_ratio, walk_forward
from marginelo.league import offset_league, synthetic_benchmark
from marginelo.ratings import Mode


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--offsets", default="0,54,100")
    ap.add_argument("--seasons", type=int, default=42)
    ap.add_argument("--n-samples", type=int, default=20)
    ap.add_argument("--min-count", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    bench = synthetic_benchmark(seed=args.seed)
    for offset in map(float, args.offsets.split(",")):
        games, book = offset_league(bench, offset, seasons=args.seasons, seed=args.seed)
        records = walk_forward(games, None, Mode.SPREAD, book=book)
        data = home_field_ratio(games)
        model = model_home_field_ratio(records, n_samples=args.n_samples, seed=args.seed)
        sd = np.sqrt(data.stderr ** 2 + model.stderr ** 2)
        with np.errstate(invalid="ignore", divide="ignore"):
            z = np.abs(data.ratio - model.ratio) / sd
        keep = data.populated(args.min_count) & model.valid & (sd > 0)
        print(f"offset {offset:g}: {len(games)} games, {keep.sum()} bins, "
              f"max z {np.nanmax(z[keep]):.2f}, data ratio at +3 "
              f"{data.ratio[list(data.centers).index(3.0)]:.3f}")
        with open(f"home_field_{offset:g}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["center", "data_count", "data_ratio", "data_se",
                        "model_ratio", "model_se", "z"])
            for row in zip(data.centers, data.unbiased, data.ratio, data.stderr,
                           model.ratio, model.stderr, z):
                w.writerow([f"{v:g}" for v in row])


if __name__ == "__main__":
    main()
