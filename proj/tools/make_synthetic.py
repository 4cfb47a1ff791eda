#!/usr/bin/env python3
"""Writes the small synthetic datasets bundled in data/.

league.csv: binary outcomes between 12 teams whose scores follow an
Ornstein-Uhlenbeck process (variance 1, timescale 2 years) plus a constant
offset, with a home-advantage bonus of 0.3 and probit noise.

scores.csv: goal counts between 8 teams drawn from Poisson(exp(d)) with
static scores, for the points-based likelihoods.
"""

import argparse
import csv
import datetime as dt
import math
import pathlib
import random


def league(rng, path):
    teams = [f"team{k:02d}" for k in range(12)]
    offset = {t: rng.gauss(0.0, 0.7) for t in teams}
    ou = {t: rng.gauss(0.0, 1.0) for t in teams}
    day = dt.date(2015, 1, 1)
    last = 0.0
    rows = []
    for n in range(1500):
        day += dt.timedelta(days=rng.choice([0, 0, 1, 1, 2]))
        t = (day - dt.date(2015, 1, 1)).days / 365.25
        a = math.exp(-(t - last) / 2.0)
        for k in teams:
            ou[k] = a * ou[k] + math.sqrt(1.0 - a * a) * rng.gauss(0.0, 1.0)
        last = t
        i, j = rng.sample(teams, 2)
        home = rng.random() < 0.5
        d = offset[i] + ou[i] - offset[j] - ou[j] + (0.3 if home else 0.0)
        outcome = 1 if d + rng.gauss(0.0, 1.0) > 0 else -1
        rows.append([day.isoformat(), i, j, outcome, int(home)])
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["t", "comp_i", "comp_j", "outcome", "home"])
        w.writerows(rows)


def poisson(rng, lam):
    # Knuth's method; rates here are small.
    limit, k, p = math.exp(-lam), 0, 1.0
    while True:
        p *= rng.random()
        if p <= limit:
            return k
        k += 1


def scores(rng, path):
    teams = [f"club{k}" for k in range(8)]
    strength = {t: rng.gauss(0.0, 0.4) for t in teams}
    start = 1_500_000_000
    rows = []
    for n in range(400):
        i, j = rng.sample(teams, 2)
        d = strength[i] - strength[j]
        rows.append([start + 86400 * (n // 4), i, j, poisson(rng, math.exp(d)), poisson(rng, math.exp(-d))])
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["t", "comp_i", "comp_j", "points_i", "points_j"])
        w.writerows(rows)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data"))
    parser.add_argument("--seed", type=int, default=2024)
    args = parser.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(args.seed)
    league(rng, out / "league.csv")
    scores(rng, out / "scores.csv")


if __name__ == "__main__":
    main()
